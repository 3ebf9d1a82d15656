"""key=value config files and atomic file output."""
from __future__ import annotations

import os
import tempfile


def parse_key_values(text: str) -> dict[str, str]:
    """One ``key=value`` per line; ``#`` starts a comment; blank lines skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        key, value = s.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def read_key_values(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_key_values(fh.read())


def format_key_values(items) -> str:
    pairs = items.items() if isinstance(items, dict) else items
    return "".join(f"{k}={v}\n" for k, v in pairs)


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
