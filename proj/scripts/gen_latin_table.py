#!/usr/bin/env python3
"""Regenerates src/latin_table.inc from the Unicode database.

Each row maps a precomposed Vietnamese Latin vowel to its base letter,
vowel-quality mark and tone mark (0 when absent).
"""
import unicodedata

QUALITY = {0x0302, 0x0306, 0x031B}
TONE = {0x0300, 0x0301, 0x0303, 0x0309, 0x0323}
BASES = "aeiouyAEIOUY"

rows = []
for cp in range(0x00C0, 0x1F00):
    ch = chr(cp)
    d = unicodedata.normalize("NFD", ch)
    if len(d) < 2 or d[0] not in BASES:
        continue
    marks = [ord(c) for c in d[1:]]
    q = [m for m in marks if m in QUALITY]
    t = [m for m in marks if m in TONE]
    if len(q) + len(t) != len(marks) or len(q) > 1 or len(t) > 1:
        continue
    rows.append((cp, ord(d[0]), q[0] if q else 0, t[0] if t else 0))

with open("src/latin_table.inc", "w", encoding="utf-8") as out:
    out.write("// Generated by scripts/gen_latin_table.py; do not edit.\n")
    out.write("// {precomposed, base, quality mark, tone mark}\n")
    for cp, b, q, t in rows:
        out.write(f"{{0x{cp:04X}, 0x{b:04X}, 0x{q:04X}, 0x{t:04X}}},  // {chr(cp)}\n")
print(len(rows))
