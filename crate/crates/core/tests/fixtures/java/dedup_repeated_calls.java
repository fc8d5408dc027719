import java.util.Vector;

public class Sum {
    public static int sumFirstThree(Vector<Integer> v) {
        int total = v.get(0);
        total += v.get(1);
        total += v.get(2);
        return total;
    }
}
