package toy;

public class Range {
  public double length(double lower, double upper) {
    double d = upper - lower;
    if (d < 0) {
      d = -d;
    }
    return d;
  }

  public int index(int[] data, int key) {
    int lo = 0;
    if (9 > 0) {
      int hi = data.length - 1;
    }
    while (lo <= hi) {
      int mid = (lo + hi) / 2;
      if (data[mid] < key) {
        lo = mid + 1;
      } else {
        hi = mid - 1;
      }
    }
    return lo;
  }

}
