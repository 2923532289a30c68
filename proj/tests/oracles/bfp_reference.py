"""Exact-arithmetic reference encoder used to freeze codec test vectors.

Rational arithmetic throughout; independent of the C++ floating-point path.
Usage: python3 bfp_reference.py            print the frozen vectors
       python3 bfp_reference.py --check BFPS
           encode random float32 blocks over every candidate (SE, BS) pair
           with the bfps tool and require bit-identical decoded values
"""
from fractions import Fraction
import math
import os
import random
import struct
import subprocess
import sys
import tempfile


def exponent_of(x: Fraction) -> int:
    # floor(log2(|x|)) computed exactly
    x = abs(x)
    e = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** e > x:
        e -= 1
    while Fraction(2) ** (e + 1) <= x:
        e += 1
    return e


def round_half_even(q: Fraction) -> int:
    fl = math.floor(q)
    rem = q - fl
    if rem > Fraction(1, 2):
        return fl + 1
    if rem < Fraction(1, 2):
        return fl
    return fl if fl % 2 == 0 else fl + 1


def encode(values, qb, se):
    width = qb - se
    frac = width - 2
    hi = 2 ** (width - 1) - 1
    lo = -(2 ** (width - 1))
    vals = [Fraction(v) for v in values]
    nz = [v for v in vals if v != 0]
    if not nz:
        return None, [0] * len(vals)
    e = max(exponent_of(v) for v in nz)
    while True:
        ms = [round_half_even(v * Fraction(2) ** (frac - e)) for v in vals]
        if max(ms) > hi:
            e += 1
            continue
        assert min(ms) >= lo
        return e, ms


def decode(e, ms, qb, se):
    frac = qb - se - 2
    if e is None:
        return [0.0] * len(ms)
    return [float(Fraction(m) * Fraction(2) ** (e - frac)) for m in ms]


CASES = [
    ([2.0, 2.0], 8, 3),
    ([1.0, 0.0078125], 8, 3),
    ([1.0, 0.09375], 8, 3),
    ([1.0, 0.1875], 8, 3),
    ([-3.3, 0.7, 1.25, -0.01], 8, 3),
    ([1.99, -0.5], 8, 3),
    ([0.1, 0.2, 0.3, 0.4], 16, 4),
    ([-1.0, 1.0], 8, 6),
    ([6.5, -6.5, 0.0], 8, 2),
]

def random_values(rng, count):
    # float32-representable values spanning many binades, with exact zeros
    out = []
    for _ in range(count):
        if rng.random() < 0.05:
            out.append(0.0)
            continue
        v = rng.gauss(0.0, 1.0) * 2.0 ** rng.randint(-8, 8)
        out.append(struct.unpack("<f", struct.pack("<f", v))[0])
    return out


def check(tool):
    rng = random.Random(0x5EED)
    failures = 0
    checked = 0
    configs = [(16, se) for se in range(2, 8)] + [(8, se) for se in range(2, 7)]
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "in.f32")
        dst = os.path.join(tmp, "out.f32")
        for qb, se in configs:
            for bs in (1, 2, 4, 8, 16, 24, 32, 48):
                values = random_values(rng, bs * 40)
                with open(src, "wb") as f:
                    f.write(struct.pack("<%df" % len(values), *values))
                subprocess.run([tool, "quant-error", "--input", src, "--layout", "flat",
                                "--qb", str(qb), "--se", str(se), "--bs", str(bs),
                                "--decoded", dst], check=True, stdout=subprocess.DEVNULL)
                with open(dst, "rb") as f:
                    raw = f.read()
                got = struct.unpack("<%df" % len(values), raw)
                want = []
                for b in range(0, len(values), bs):
                    e, ms = encode(values[b:b + bs], qb, se)
                    want.extend(decode(e, ms, qb, se))
                bad = sum(1 for g, w in zip(got, want) if g != w)
                checked += len(values)
                if bad:
                    failures += 1
                    print("mismatch q_b=%d SE=%d BS=%d: %d values" % (qb, se, bs, bad))
    print("checked %d values, %d failing configurations" % (checked, failures))
    return 1 if failures else 0


if __name__ == "__main__":
    if len(sys.argv) == 3 and sys.argv[1] == "--check":
        sys.exit(check(sys.argv[2]))
    for values, qb, se in CASES:
        e, ms = encode(values, qb, se)
        print(values, qb, se, "->", e, ms, decode(e, ms, qb, se))
