#!/usr/bin/env python3
"""Generate core/src/unicode_tables.inc: general-category ranges used by the
BPE pre-tokenizer.

Requires `unicodedata2==16.0.0`, the Unicode version used by the regex engine
that tiktoken's pre-tokenization patterns run on.
"""
import sys
from pathlib import Path

import unicodedata2 as ud

CLASSES = {
    "Lu": "Lu", "Ll": "Ll", "Lt": "Lt", "Lm": "Lm", "Lo": "Lo",
    "Mn": "M", "Mc": "M", "Me": "M",
    "Nd": "N", "Nl": "N", "No": "N",
}


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "core/src/unicode_tables.inc"
    ranges = []
    cur = None
    for cp in range(0x110000):
        cls = CLASSES.get(ud.category(chr(cp)))
        if cls is None:
            cur = None
            continue
        if cur is not None and cur[2] == cls and cur[1] == cp - 1:
            cur[1] = cp
        else:
            cur = [cp, cp, cls]
            ranges.append(cur)
    lines = [
        f"// Generated by scripts/gen_unicode_tables.py from Unicode {ud.unidata_version}. Do not edit.",
        f"// {len(ranges)} ranges.",
    ]
    for lo, hi, cls in ranges:
        lines.append(f"{{0x{lo:X}, 0x{hi:X}, CharClass::{cls}}},")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(ranges)} ranges, Unicode {ud.unidata_version})")


if __name__ == "__main__":
    main()
