package org.example.data;

public class Range {
  private double lower;
  private double upper;

  public void scale(double factor) {
    double tmp = lower * factor;
    lower = upper * factor;
    upper = -tmp;
    log(lower, upper);
  }

  private void log(double a, double b) {
    System.out.println(a + ", " + b);
  }
}
