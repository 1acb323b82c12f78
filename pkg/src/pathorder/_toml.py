"""Reader for the flat TOML-compatible config format.

Supports the subset the experiment configs use: top-level `key = value`
pairs with strings, integers, floats, booleans, and (possibly multiline)
arrays; `#` comments.  Tables/sections are rejected.  Files written for
this parser are valid TOML, not the other way around.
"""

from __future__ import annotations

from pathorder.errors import ParseError


def parse_flat_toml(text: str) -> dict:
    data: dict = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = _strip_comment(lines[i], lineno)
        i += 1
        if not line:
            continue
        if line.startswith("["):
            raise ParseError("tables are not supported in this config",
                             line=lineno)
        if "=" not in line:
            raise ParseError("expected `key = value`", line=lineno)
        key, _, rhs = line.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if not key or not all(c.isalnum() or c in "_-" for c in key):
            raise ParseError(f"bad key {key!r}", line=lineno)
        if key in data:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        # arrays may continue over several lines
        while rhs.count("[") > rhs.count("]"):
            if i >= len(lines):
                raise ParseError("unterminated array", line=lineno)
            rhs += " " + _strip_comment(lines[i], i + 1)
            i += 1
        data[key] = _parse_value(rhs.strip(), lineno)
    return data


def _strip_comment(line: str, lineno: int) -> str:
    out = []
    in_str = False
    escaped = False
    for ch in line:
        if in_str:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = False
            continue
        if ch == "#":
            break
        if ch == '"':
            in_str = True
        out.append(ch)
    if in_str:
        raise ParseError("unterminated string", line=lineno)
    return "".join(out).strip()


def _parse_value(text: str, lineno: int):
    if not text:
        raise ParseError("missing value", line=lineno)
    if text.startswith('"'):
        return _parse_string(text, lineno)
    if text.startswith("["):
        return _parse_array(text, lineno)
    if text == "true":
        return True
    if text == "false":
        return False
    return _parse_number(text, lineno)


def _parse_string(text: str, lineno: int) -> str:
    if len(text) < 2 or not text.endswith('"'):
        raise ParseError(f"bad string {text!r}", line=lineno)
    body = text[1:-1]
    out = []
    escapes = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "r": "\r"}
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) or body[i + 1] not in escapes:
                raise ParseError(f"bad escape in {text!r}", line=lineno)
            out.append(escapes[body[i + 1]])
            i += 2
            continue
        if ch == '"':
            raise ParseError(f"bad string {text!r}", line=lineno)
        out.append(ch)
        i += 1
    return "".join(out)


def _parse_number(text: str, lineno: int):
    cleaned = text.replace("_", "")
    try:
        if any(c in cleaned for c in ".eE") and not cleaned.startswith("0x"):
            return float(cleaned)
        return int(cleaned, 0) if cleaned.startswith(("0x", "0o", "0b")) \
            else int(cleaned)
    except ValueError:
        raise ParseError(f"bad value {text!r}", line=lineno) from None


def _parse_array(text: str, lineno: int) -> list:
    if not text.endswith("]"):
        raise ParseError("unterminated array", line=lineno)
    items = _split_array(text[1:-1], lineno)
    return [_parse_value(item, lineno) for item in items]


def _split_array(body: str, lineno: int) -> list[str]:
    items = []
    depth = 0
    in_str = False
    escaped = False
    cur = []
    for ch in body:
        if in_str:
            cur.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
            cur.append(ch)
        elif ch == "[":
            depth += 1
            cur.append(ch)
        elif ch == "]":
            depth -= 1
            cur.append(ch)
        elif ch == "," and depth == 0:
            items.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        items.append(tail)
    return items
