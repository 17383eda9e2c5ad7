"""Generates src/pdf/encoding_tables.cpp (code -> Unicode tables, glyph names)."""
import sys

ascii_names = ("space exclam quotedbl numbersign dollar percent ampersand quotesingle "
               "parenleft parenright asterisk plus comma hyphen period slash "
               "zero one two three four five six seven eight nine colon semicolon less "
               "equal greater question at").split()
ascii_names += [chr(c) for c in range(ord('A'), ord('Z') + 1)]
ascii_names += "bracketleft backslash bracketright asciicircum underscore grave".split()
ascii_names += [chr(c) for c in range(ord('a'), ord('z') + 1)]
ascii_names += "braceleft bar braceright asciitilde".split()
assert len(ascii_names) == 95

win_upper = {
    0x80: "Euro", 0x82: "quotesinglbase", 0x83: "florin", 0x84: "quotedblbase",
    0x85: "ellipsis", 0x86: "dagger", 0x87: "daggerdbl", 0x88: "circumflex",
    0x89: "perthousand", 0x8A: "Scaron", 0x8B: "guilsinglleft", 0x8C: "OE",
    0x8E: "Zcaron", 0x91: "quoteleft", 0x92: "quoteright", 0x93: "quotedblleft",
    0x94: "quotedblright", 0x95: "bullet", 0x96: "endash", 0x97: "emdash",
    0x98: "tilde", 0x99: "trademark", 0x9A: "scaron", 0x9B: "guilsinglright",
    0x9C: "oe", 0x9E: "zcaron", 0x9F: "Ydieresis",
}
latin1_names = ("space exclamdown cent sterling currency yen brokenbar section dieresis "
                "copyright ordfeminine guillemotleft logicalnot hyphen registered macron "
                "degree plusminus twosuperior threesuperior acute mu paragraph periodcentered "
                "cedilla onesuperior ordmasculine guillemotright onequarter onehalf "
                "threequarters questiondown Agrave Aacute Acircumflex Atilde Adieresis Aring "
                "AE Ccedilla Egrave Eacute Ecircumflex Edieresis Igrave Iacute Icircumflex "
                "Idieresis Eth Ntilde Ograve Oacute Ocircumflex Otilde Odieresis multiply "
                "Oslash Ugrave Uacute Ucircumflex Udieresis Yacute Thorn germandbls agrave "
                "aacute acircumflex atilde adieresis aring ae ccedilla egrave eacute "
                "ecircumflex edieresis igrave iacute icircumflex idieresis eth ntilde ograve "
                "oacute ocircumflex otilde odieresis divide oslash ugrave uacute ucircumflex "
                "udieresis yacute thorn ydieresis").split()
assert len(latin1_names) == 96
for i, n in enumerate(latin1_names):
    win_upper[0xA0 + i] = n

glyphs = {}
for i, n in enumerate(ascii_names):
    glyphs[n] = 0x20 + i
for code, n in win_upper.items():
    cp = ord(bytes([code]).decode("cp1252"))
    if n == "space":
        continue
    glyphs.setdefault(n, cp)
# Glyph names with AGL values that differ from the ASCII/cp1252 slot above, or
# that only occur in StandardEncoding / Differences arrays.
glyphs.update({
    "quoteright": 0x2019, "quoteleft": 0x2018, "fi": 0xFB01, "fl": 0xFB02,
    "ff": 0xFB00, "ffi": 0xFB03, "ffl": 0xFB04, "fraction": 0x2044,
    "dotlessi": 0x0131, "Lslash": 0x0141, "lslash": 0x0142, "breve": 0x02D8,
    "dotaccent": 0x02D9, "ring": 0x02DA, "ogonek": 0x02DB, "caron": 0x02C7,
    "hungarumlaut": 0x02DD, "minus": 0x2212, "nbspace": 0x00A0,
    "sfthyphen": 0x00AD, "mu": 0x00B5, "Delta": 0x2206, "Omega": 0x2126,
    "pi": 0x03C0, "lozenge": 0x25CA, "notequal": 0x2260, "lessequal": 0x2264,
    "greaterequal": 0x2265, "infinity": 0x221E, "summation": 0x2211,
    "product": 0x220F, "integral": 0x222B, "radical": 0x221A,
    "partialdiff": 0x2202, "approxequal": 0x2248, "apple": 0xF8FF,
    "periodcentered": 0x00B7, "hyphen": 0x002D, "space": 0x0020,
})

std_upper = {
    0xA1: "exclamdown", 0xA2: "cent", 0xA3: "sterling", 0xA4: "fraction", 0xA5: "yen",
    0xA6: "florin", 0xA7: "section", 0xA8: "currency", 0xA9: "quotesingle",
    0xAA: "quotedblleft", 0xAB: "guillemotleft", 0xAC: "guilsinglleft",
    0xAD: "guilsinglright", 0xAE: "fi", 0xAF: "fl", 0xB1: "endash", 0xB2: "dagger",
    0xB3: "daggerdbl", 0xB4: "periodcentered", 0xB6: "paragraph", 0xB7: "bullet",
    0xB8: "quotesinglbase", 0xB9: "quotedblbase", 0xBA: "quotedblright",
    0xBB: "guillemotright", 0xBC: "ellipsis", 0xBD: "perthousand",
    0xBF: "questiondown", 0xC1: "grave", 0xC2: "acute", 0xC3: "circumflex",
    0xC4: "tilde", 0xC5: "macron", 0xC6: "breve", 0xC7: "dotaccent", 0xC8: "dieresis",
    0xCA: "ring", 0xCB: "cedilla", 0xCD: "hungarumlaut", 0xCE: "ogonek", 0xCF: "caron",
    0xD0: "emdash", 0xE1: "AE", 0xE3: "ordfeminine", 0xE8: "Lslash", 0xE9: "Oslash",
    0xEA: "OE", 0xEB: "ordmasculine", 0xF1: "ae", 0xF5: "dotlessi", 0xF8: "lslash",
    0xF9: "oslash", 0xFA: "oe", 0xFB: "germandbls",
}
# StandardEncoding's accent glyphs are spacing accents.
glyphs.update({"grave": 0x0060, "acute": 0x00B4, "circumflex": 0x02C6, "tilde": 0x02DC,
               "macron": 0x00AF, "dieresis": 0x00A8, "cedilla": 0x00B8})

def table(fn):
    return [fn(c) for c in range(256)]

def standard(c):
    if 0x20 <= c <= 0x7E:
        if c == 0x27: return 0x2019
        if c == 0x60: return 0x2018
        return c
    n = std_upper.get(c)
    return glyphs[n] if n else 0

def winansi(c):
    if 0x20 <= c <= 0x7E: return c
    if c < 0x80: return 0
    try:
        return ord(bytes([c]).decode("cp1252"))
    except UnicodeDecodeError:
        return 0

def macroman(c):
    if 0x20 <= c <= 0x7E: return c
    if c < 0x80: return 0
    return ord(bytes([c]).decode("mac_roman"))

def emit_table(name, values):
    rows = []
    for i in range(0, 256, 8):
        rows.append("    " + ", ".join("0x%04X" % v for v in values[i:i + 8]) + ",")
    return "const std::array<char32_t, 256> %s = {{\n%s\n}};\n" % (name, "\n".join(rows))

out = ["// Generated by tools/gen/gen_pdf_encodings.py. Do not edit.",
       "", '#include "encodings.hpp"', "", "namespace dqa::pdf {", ""]
out.append(emit_table("kStandardEncoding", table(standard)))
out.append(emit_table("kWinAnsiEncoding", table(winansi)))
out.append(emit_table("kMacRomanEncoding", table(macroman)))
items = sorted(glyphs.items())
out.append("const std::array<GlyphName, %d> kGlyphNames = {{" % len(items))
for n, cp in items:
    out.append('    {"%s", 0x%04X},' % (n, cp))
out.append("}};\n")
out.append("}  // namespace dqa::pdf")
sys.stdout.write("\n".join(out) + "\n")
