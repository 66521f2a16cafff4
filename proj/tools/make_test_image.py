"""Writes the 256x256 grayscale test image used by the wavelet acceptance check."""
import sys

import numpy as np
from skimage import data, transform

out = sys.argv[1] if len(sys.argv) > 1 else "tests/data/cameraman256.pgm"
img = transform.resize(data.camera(), (256, 256), anti_aliasing=True, preserve_range=True)
img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
with open(out, "wb") as fh:
    fh.write(b"P5\n256 256\n255\n")
    fh.write(img.tobytes())
