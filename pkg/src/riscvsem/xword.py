"""Register-width integer arithmetic.

Register values are plain Python ints kept in canonical unsigned form
``0 <= v < 2**xlen``.  Signed views are computed on demand.  Immediates and
bitfields (``MachineInt``) are ordinary signed ints.
"""

from __future__ import annotations

from functools import lru_cache


def sign_extend(value: int, bits: int) -> int:
    """Interpret the low ``bits`` bits of ``value`` as two's complement."""
    value &= (1 << bits) - 1
    if value >> (bits - 1):
        return value - (1 << bits)
    return value


def zero_extend(value: int, bits: int) -> int:
    return value & ((1 << bits) - 1)


class XWordOps:
    """The operator set over one register width (32 or 64 bits)."""

    def __init__(self, xlen: int):
        if xlen not in (32, 64):
            raise ValueError(f"unsupported xlen {xlen}")
        self.xlen = xlen
        self.mask = (1 << xlen) - 1
        self.min_signed = 1 << (xlen - 1)
        self.shamt_mask = xlen - 1

    def __repr__(self) -> str:
        return f"XWordOps({self.xlen})"

    def signed(self, a: int) -> int:
        return a - (1 << self.xlen) if a & self.min_signed else a

    def from_imm(self, imm: int) -> int:
        return imm & self.mask

    def add(self, a: int, b: int) -> int:
        return (a + b) & self.mask

    def sub(self, a: int, b: int) -> int:
        return (a - b) & self.mask

    def and_(self, a: int, b: int) -> int:
        return a & b

    def or_(self, a: int, b: int) -> int:
        return a | b

    def xor(self, a: int, b: int) -> int:
        return a ^ b

    def sll(self, a: int, b: int) -> int:
        return (a << (b & self.shamt_mask)) & self.mask

    def srl(self, a: int, b: int) -> int:
        return a >> (b & self.shamt_mask)

    def sra(self, a: int, b: int) -> int:
        return (self.signed(a) >> (b & self.shamt_mask)) & self.mask

    def slt(self, a: int, b: int) -> int:
        return int(self.signed(a) < self.signed(b))

    def sltu(self, a: int, b: int) -> int:
        return int(a < b)

    def mul(self, a: int, b: int) -> int:
        return (a * b) & self.mask

    def mulh(self, a: int, b: int) -> int:
        return ((self.signed(a) * self.signed(b)) >> self.xlen) & self.mask

    def mulhsu(self, a: int, b: int) -> int:
        return ((self.signed(a) * b) >> self.xlen) & self.mask

    def mulhu(self, a: int, b: int) -> int:
        return (a * b) >> self.xlen

    def div(self, a: int, b: int) -> int:
        if b == 0:
            return self.mask
        sa, sb = self.signed(a), self.signed(b)
        # truncates toward zero; min / -1 wraps back to min through the mask
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        return q & self.mask

    def divu(self, a: int, b: int) -> int:
        if b == 0:
            return self.mask
        return a // b

    def rem(self, a: int, b: int) -> int:
        if b == 0:
            return a
        sa, sb = self.signed(a), self.signed(b)
        r = abs(sa) % abs(sb)
        if sa < 0:
            r = -r
        return r & self.mask

    def remu(self, a: int, b: int) -> int:
        if b == 0:
            return a
        return a % b

    def sign_extend_w(self, a: int) -> int:
        """Sign-extend the low 32 bits to the full register width."""
        return sign_extend(a, 32) & self.mask

    def zero_extend_w(self, a: int) -> int:
        return a & 0xFFFFFFFF


@lru_cache(maxsize=None)
def ops(xlen: int) -> XWordOps:
    return XWordOps(xlen)
