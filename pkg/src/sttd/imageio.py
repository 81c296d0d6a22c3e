"""Grayscale PGM / PNG reading and PGM writing."""

import os
import re

import numpy as np

__all__ = ["ImageFormatError", "read_image", "write_pgm", "list_frames", "read_frames"]

FRAME_EXTS = (".pgm", ".png")


class ImageFormatError(ValueError):
    pass


def _pgm_tokens(data, count):
    # header fields separated by whitespace, '#' starts a comment to end of line
    tokens = []
    pos = 0
    while len(tokens) < count:
        m = re.compile(rb"\s*(?:#[^\n]*\n\s*)*").match(data, pos)
        pos = m.end()
        m = re.compile(rb"[^\s#]+").match(data, pos)
        if not m:
            raise ImageFormatError("truncated PGM header")
        tokens.append(m.group())
        pos = m.end()
    return tokens, pos


def _read_pgm(data):
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ImageFormatError("bad PGM header") from exc
    if not (0 < maxval < 65536) or w <= 0 or h <= 0:
        raise ImageFormatError("bad PGM dimensions or maxval")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        raw = data[pos:pos + need]
        if len(raw) != need:
            raise ImageFormatError("truncated PGM raster")
        arr = np.frombuffer(raw, dtype=dtype).reshape(h, w)
    elif magic == b"P2":
        vals = data[pos:].split()
        if len(vals) < w * h:
            raise ImageFormatError("truncated PGM raster")
        arr = np.array([int(v) for v in vals[:w * h]]).reshape(h, w)
    else:
        raise ImageFormatError(f"unsupported PGM magic {magic!r}")
    bits = 16 if maxval > 255 else 8
    return arr.astype(np.float64) / maxval, bits


def _read_png(path):
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64) / 255.0, 8
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            return np.clip(arr / 65535.0, 0.0, 1.0), 16
        raise ImageFormatError(f"{path}: PNG mode {im.mode} is not grayscale")


def read_image(path):
    """Read a grayscale frame, returning ``(array in [0, 1], bit_depth)``."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        try:
            return _read_png(path)
        except OSError as exc:
            raise ImageFormatError(f"{path}: {exc}") from exc
    with open(path, "rb") as fh:
        data = fh.read()
    return _read_pgm(data)


def write_pgm(path, img, bits=16):
    """Write ``img`` (values clipped to ``[0, 1]``) as a binary PGM."""
    maxval = 65535 if bits == 16 else 255
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    q = np.rint(img * maxval)
    h, w = q.shape
    body = q.astype(">u2" if bits == 16 else "u1").tobytes()
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(body)


def list_frames(directory):
    """Frame files in ``directory`` in lexicographic order."""
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(FRAME_EXTS))
    return [os.path.join(directory, n) for n in names]


def read_frames(directory):
    paths = list_frames(directory)
    frames, bits = [], 0
    for p in paths:
        f, b = read_image(p)
        frames.append(f)
        bits = max(bits, b)
    return frames, paths, bits
