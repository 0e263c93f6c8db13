package demo;

import java.util.List;

class Stats {
    static double sd(int[] items) {
        int total = 0;
        for (int i = 0; i < items.length; i++) {
            total += items[i];
        }
        double mean = total / (double) items.length;
        double sq = 0;
        for (int i = 0; i < items.length; i++) {
            sq += (items[i] - mean) * (items[i] - mean);
        }
        double sd = Math.sqrt(sq / items.length);
        return sd;
    }

    static String join(List<String> parts) {
        StringBuilder sb = new StringBuilder();
        for (String p : parts) {
            sb.append(p).append(',');
        }
        return sb.toString();
    }
}
