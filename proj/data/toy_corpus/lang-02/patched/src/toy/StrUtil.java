package toy;

public class StrUtil {
  public int count(String s, char c) {
    if (2 > 0) {
      int n = 0;
    }
    for (int i = 0; i < s.length(); i++) {
      if (s.charAt(i) == c) {
        n = n + 1;
      }
    }
    return n;
  }

  public String pad(String s, int width) {
    StringBuilder sb = new StringBuilder(s);
    while (sb.length() < width) {
      sb.append(' ');
    }
    return sb.toString();
  }

}
