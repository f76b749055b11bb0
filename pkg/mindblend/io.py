"""Atomic file output.

Every artifact the CLI produces goes through atomic_write: content is fully
rendered in memory, written to a temp file in the target directory, then
moved into place with os.replace. A failing command never leaves a partial
file behind.
"""

import os
import tempfile
from pathlib import Path

from exceptions import MindBlendFileNotFoundError


def atomic_write(content: str, target: Path) -> Path:
    """
    Write content to target path atomically.
    Uses temp file + rename to prevent partial writes.
    """
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_path = tempfile.mkstemp(
        dir=target.parent,
        prefix=".mindblend_tmp_",
        suffix=target.suffix,
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        os.replace(tmp_path, target)  # atomic on POSIX
    except Exception:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
    return target


def read_text(path: Path) -> tuple[str, bool]:
    """Read a UTF-8 file, replacing invalid bytes.

    Returns:
        (text, had_invalid_bytes)

    Raises:
        MindBlendFileNotFoundError: path does not exist.
    """
    path = Path(path)
    if not path.is_file():
        raise MindBlendFileNotFoundError(str(path))
    raw = path.read_bytes()
    try:
        return raw.decode("utf-8"), False
    except UnicodeDecodeError:
        return raw.decode("utf-8", errors="replace"), True


def split_lines(text: str) -> list[str]:
    """Split on LF, dropping a trailing CR from each line (CRLF files)."""
    if not text:
        return []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]
