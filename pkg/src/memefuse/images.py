"""Image handling: binary PPM/PGM decoding, resize, and exact augmentations.

Images are numpy uint8 arrays of shape (height, width, channels) with
channels 1 (PGM) or 3 (PPM).  Only the binary netpbm variants P5/P6 with
maxval 255 are readable; that keeps this package free of codec
dependencies.  Full-fidelity meme decoding happens outside the core.
"""

import numpy as np

from .kernels import resize_bilinear

AUGMENT_OPS = ("rotate90", "rotate180", "hflip", "vflip")


class ImageFormatError(ValueError):
    pass


def _read_header_tokens(data, count):
    # netpbm header: ASCII tokens separated by whitespace, '#' comments
    # run to end of line.  Returns (tokens, offset past single whitespace
    # char that terminates the last token).
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ImageFormatError("truncated netpbm header")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise ImageFormatError("unterminated comment in header")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageFormatError("missing whitespace after netpbm header")
    return tokens, pos + 1


def read_netpbm(path):
    """Read a binary PGM (P5) or PPM (P6) file into (h, w, c) uint8."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P5":
        channels = 1
    elif data[:2] == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"{path}: not a binary PGM/PPM file")
    tokens, offset = _read_header_tokens(data, 4)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise ImageFormatError(f"{path}: non-numeric netpbm header") from None
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval}")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad dimensions {width}x{height}")
    n = height * width * channels
    payload = data[offset : offset + n]
    if len(payload) != n:
        raise ImageFormatError(
            f"{path}: expected {n} pixel bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels).copy()


def write_netpbm(img, path):
    """Write (h, w, c) uint8 as binary PGM (c=1) or PPM (c=3)."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ImageFormatError(f"expected (h, w, 1|3) image, got shape {img.shape}")
    magic = b"P5" if img.shape[2] == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (img.shape[1], img.shape[0])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.tobytes())


def resize_image(img, out_h=224, out_w=224):
    """Bilinear resize preserving channel count; identity when sizes match."""
    img = np.asarray(img, dtype=np.uint8)
    if img.shape[0] == out_h and img.shape[1] == out_w:
        return img.copy()
    return resize_bilinear(img, out_h, out_w)


def augment_image(img, op):
    """Exact pixel permutation: rotate90 (counter-clockwise), rotate180,
    hflip, vflip.  No interpolation."""
    img = np.asarray(img, dtype=np.uint8)
    if op == "rotate90":
        return np.rot90(img, k=1, axes=(0, 1)).copy()
    if op == "rotate180":
        return np.rot90(img, k=2, axes=(0, 1)).copy()
    if op == "hflip":
        return img[:, ::-1].copy()
    if op == "vflip":
        return img[::-1, :].copy()
    raise ValueError(f"unknown augmentation {op!r}; expected one of {AUGMENT_OPS} or crop")


def crop_image(img, x, y, w, h):
    """Exact crop of the (x, y, w, h) rectangle (x = column, y = row)."""
    img = np.asarray(img, dtype=np.uint8)
    ih, iw = img.shape[:2]
    if x < 0 or y < 0 or w < 1 or h < 1 or x + w > iw or y + h > ih:
        raise ValueError(
            f"crop ({x},{y},{w},{h}) out of bounds for {ih}x{iw} image"
        )
    return img[y : y + h, x : x + w].copy()


def color_adjust(img, scale, shift):
    """Per-channel linear intensity transform: clip(round(v*scale + shift)).

    Used for color augmentation of minority-class images.  scale/shift are
    scalars or per-channel sequences.
    """
    img = np.asarray(img, dtype=np.uint8)
    scale = np.asarray(scale, dtype=np.float64).reshape(1, 1, -1)
    shift = np.asarray(shift, dtype=np.float64).reshape(1, 1, -1)
    out = np.floor(img.astype(np.float64) * scale + shift + 0.5)
    return np.clip(out, 0, 255).astype(np.uint8)
