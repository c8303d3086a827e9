"""Independent reference implementations used as test oracles.

Nothing here imports the package; each oracle is written from the plain
definition (flat arrays, step-by-step walking) rather than modular algebra.
"""


def incr_walk(base, delta, cf_size):
    """Step one byte at a time, wrapping by hand."""
    p = base
    for _ in range(delta):
        p += 1
        if p == cf_size:
            p = 0
    return p


def full_by_headroom(log_ptr, slice_top, cf_size):
    """Full when exactly one word of headroom is left before slice_top."""
    words, p = 0, log_ptr
    while True:
        p += 2
        if p >= cf_size:
            p -= cf_size
        words += 1
        if p == slice_top:
            return words == 1
        if words > cf_size:
            return False


class FlatLog:
    """Log as a flat array with an unbounded write counter."""

    def __init__(self, cf_size, start=0):
        self.cf = cf_size
        self.buf = [0] * cf_size
        self.count = start

    def write_word(self, w):
        for b in (w & 0xFF, w >> 8):
            self.buf[self.count % self.cf] = b
            self.count += 1

    @property
    def ptr(self):
        return self.count % self.cf


# RFC 4231 HMAC-SHA-256 test cases 1..7: (key, data, tag, truncate_to)
RFC4231 = [
    (bytes([0x0B] * 20), b"Hi There",
     "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7", 32),
    (b"Jefe", b"what do ya want for nothing?",
     "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843", 32),
    (bytes([0xAA] * 20), bytes([0xDD] * 50),
     "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe", 32),
    (bytes(range(1, 26)), bytes([0xCD] * 50),
     "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b", 32),
    (bytes([0x0C] * 20), b"Test With Truncation",
     "a3b6167473100ee06e0c796c2955552b", 16),
    (bytes([0xAA] * 131), b"Test Using Larger Than Block-Size Key - Hash Key First",
     "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54", 32),
    (bytes([0xAA] * 131),
     b"This is a test using a larger than block-size key and a larger than block-size data."
     b" The key needs to be hashed before being used by the HMAC algorithm.",
     "9b09ffa71b942fcb27635fbcd5b0e944bfdc63644f0713938a7f51535c3a35e2", 32),
]


def report_stream_oracle(cflog, top, bot, trailer):
    """Slice bytes from top, wrapping, up to bot, then the trailer."""
    cf = len(cflog)
    out, i = [], top
    while i != bot:
        out.append(cflog[i])
        i = incr_walk(i, 1, cf)
    return bytes(out) + bytes(trailer)
