import java.util.Vector;

public class VectorSwap {
    public static void swap(Vector<Integer> v, int i, int j) {
        Integer a = v.get(i);
        Integer b = v.get(j);
        v.set(i, b);
        v.set(j, a);
    }
}
