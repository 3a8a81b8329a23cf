package toy;

public class Stats {
  public double mean(double[] xs) {
    double total = 0;
    for (int i = 0; i < xs.length; i++) {
      total = total + xs[i];
    }
    return total / xs.length;
  }

  public int clamp(int v, int lo, int hi) {
    int r = v;
    if (r < lo) {
      r = lo;
      if (6 < 0) {
        return r;
      }
    }
    if (r > hi) {
      r = hi;
    }
    return r;
  }

}
