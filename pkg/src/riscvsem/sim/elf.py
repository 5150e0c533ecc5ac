"""Loader for little-endian RISC-V ELF executables."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from os import PathLike

EM_RISCV = 243
PT_LOAD = 1
SHT_SYMTAB = 2
ELFCLASS32, ELFCLASS64 = 1, 2
ELFDATA2LSB = 1
MAX_SEGMENT = 1 << 28  # larger segments are rejected rather than allocated


class ElfError(ValueError):
    """Structured parse failure; ``code`` is one of ``short-read``,
    ``bad-magic``, ``bad-class``, ``not-little-endian``, ``not-riscv``,
    ``bad-offsets``."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code


@dataclass
class ElfImage:
    xlen: int
    entry: int
    segments: list[tuple[int, bytes]]
    symbols: dict[str, int] = field(default_factory=dict)

    @property
    def tohost_addr(self) -> int | None:
        return self.symbols.get("tohost")


def _unpack(fmt: str, data: bytes, offset: int) -> tuple:
    try:
        return struct.unpack_from(fmt, data, offset)
    except struct.error:
        raise ElfError("short-read", f"{struct.calcsize(fmt)} bytes at {offset:#x}") from None


def _slice(data: bytes, offset: int, size: int) -> bytes:
    if offset < 0 or size < 0 or offset + size > len(data):
        raise ElfError("bad-offsets", f"[{offset:#x}, +{size:#x}) beyond file of {len(data):#x} bytes")
    return data[offset:offset + size]


def load_elf(source: str | PathLike | bytes) -> ElfImage:
    data = source if isinstance(source, (bytes, bytearray)) else open(source, "rb").read()
    data = bytes(data)
    if len(data) < 16:
        raise ElfError("short-read", "truncated identification")
    if data[:4] != b"\x7fELF":
        raise ElfError("bad-magic")
    ei_class, ei_data = data[4], data[5]
    if ei_class not in (ELFCLASS32, ELFCLASS64):
        raise ElfError("bad-class", str(ei_class))
    if ei_data != ELFDATA2LSB:
        raise ElfError("not-little-endian")
    is64 = ei_class == ELFCLASS64
    if is64:
        (_, machine, _, entry, phoff, shoff, _, _, phentsize, phnum,
         shentsize, shnum, _) = _unpack("<HHIQQQIHHHHHH", data, 16)
    else:
        (_, machine, _, entry, phoff, shoff, _, _, phentsize, phnum,
         shentsize, shnum, _) = _unpack("<HHIIIIIHHHHHH", data, 16)
    if machine != EM_RISCV:
        raise ElfError("not-riscv", f"e_machine={machine}")

    segments = []
    for i in range(phnum):
        header = _slice(data, phoff + i * phentsize, phentsize)
        if is64:
            p_type, _, p_offset, p_vaddr, p_paddr, p_filesz, p_memsz, _ = _unpack("<IIQQQQQQ", header, 0)
        else:
            p_type, p_offset, p_vaddr, p_paddr, p_filesz, p_memsz, _, _ = _unpack("<IIIIIIII", header, 0)
        if p_type != PT_LOAD or p_memsz == 0:
            continue
        if p_filesz > p_memsz:
            raise ElfError("bad-offsets", f"segment {i} filesz > memsz")
        if p_memsz > MAX_SEGMENT:
            raise ElfError("bad-offsets", f"segment {i} memsz {p_memsz:#x} too large")
        body = _slice(data, p_offset, p_filesz)
        segments.append((p_paddr, body + bytes(p_memsz - p_filesz)))

    return ElfImage(64 if is64 else 32, entry, segments, _symbols(data, is64, shoff, shentsize, shnum))


def _symbols(data: bytes, is64: bool, shoff: int, shentsize: int, shnum: int) -> dict[str, int]:
    if shoff == 0 or shnum == 0:
        return {}
    sections = []
    for i in range(shnum):
        header = _slice(data, shoff + i * shentsize, shentsize)
        if is64:
            _, sh_type, _, _, sh_offset, sh_size, sh_link, _, _, sh_entsize = _unpack("<IIQQQQIIQQ", header, 0)
        else:
            _, sh_type, _, _, sh_offset, sh_size, sh_link, _, _, sh_entsize = _unpack("<IIIIIIIIII", header, 0)
        sections.append((sh_type, sh_offset, sh_size, sh_link, sh_entsize))

    symbols: dict[str, int] = {}
    for sh_type, sh_offset, sh_size, sh_link, sh_entsize in sections:
        if sh_type != SHT_SYMTAB or sh_entsize == 0:
            continue
        if sh_link >= len(sections):
            raise ElfError("bad-offsets", "symbol table links to missing string table")
        _, str_off, str_size, _, _ = sections[sh_link]
        strtab = _slice(data, str_off, str_size)
        table = _slice(data, sh_offset, sh_size)
        for j in range(sh_size // sh_entsize):
            if is64:
                st_name, _, _, _, st_value, _ = _unpack("<IBBHQQ", table, j * sh_entsize)
            else:
                st_name, st_value, _, _, _, _ = _unpack("<IIIBBH", table, j * sh_entsize)
            if st_name == 0 or st_name >= len(strtab):
                continue
            end = strtab.find(b"\0", st_name)
            name = strtab[st_name:end if end >= 0 else None].decode("ascii", "replace")
            symbols.setdefault(name, st_value)
    return symbols
