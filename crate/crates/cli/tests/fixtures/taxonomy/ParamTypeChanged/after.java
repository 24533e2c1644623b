package zoo;

public class Zebra {
    private int stripeCount = 40;
    protected String name;

    public int countStripes(int from, Object label) {
        return stripeCount - from;
    }

    void gallop() { run(); }
}
