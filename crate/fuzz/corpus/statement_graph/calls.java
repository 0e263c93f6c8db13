a.b(c); int[] arr = new int[n]; arr[i] = f(arr[i-1]); try { g(); } catch (Exception e) { h(e); }
