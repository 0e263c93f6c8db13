x = 1;
y = x + 1;
if (y > 2) { x = y; } else { z = x; }
for (int i = 0; i < n; i++) { s += i; }
return s;
