package zoo;

public class Zebra {
    private int stripeCount = 40;
    protected CharSequence name;

    public int countStripes(int from, String label) {
        return stripeCount - from;
    }

    void gallop() { run(); }
}
