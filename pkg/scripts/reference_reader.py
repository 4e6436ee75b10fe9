#!/usr/bin/env python3
"""Standalone PFDS container reader (stdlib only), mirroring the README pseudocode.

usage: reference_reader.py FILE.pfds [FILE.pfds ...]
"""
import struct
import sys


def read_pfds(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16 or data[:4] != b"PFDS":
        raise ValueError(f"{path}: bad magic")
    version, dtype, rank = struct.unpack("<III", data[4:16])
    if version != 1 or dtype != 1:
        raise ValueError(f"{path}: unsupported version {version} / dtype {dtype}")
    dims = struct.unpack(f"<{rank}Q", data[16:16 + 8 * rank])
    count = 1
    for d in dims:
        count *= d
    payload = data[16 + 8 * rank:]
    if len(payload) != 4 * count:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {4 * count}")
    return dims, struct.unpack(f"<{count}f", payload)


if __name__ == "__main__":
    for p in sys.argv[1:]:
        dims, values = read_pfds(p)
        lo = min(values) if values else float("nan")
        hi = max(values) if values else float("nan")
        print(f"{p}: dims={list(dims)} min={lo:.6g} max={hi:.6g}")
