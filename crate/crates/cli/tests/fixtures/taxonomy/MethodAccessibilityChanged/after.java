package zoo;

public class Zebra {
    private int stripeCount = 40;
    protected String name;

    public int countStripes(int from, String label) {
        return stripeCount - from;
    }

    private void gallop() { run(); }
}
