String s = "unterminated
char c = '\u0041'; /* open comment
