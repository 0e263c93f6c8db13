int x = 0x1F + 1_000L; double d = 1.5e-3; x >>>= 2; a -> b; @Override
