"""Line-oriented block-text format used for instance, config and report files.

A file is a sequence of named sections.  A section starts with a header
line ``[name]`` and runs until the next header or end of file.  Within a
section each non-blank, non-comment line is either

* a key-value entry ``key = value`` (the value keeps internal commas, so
  lists like ``seeds = 0, 1, 2`` stay one entry), or
* a table row of comma-separated cells; the first such line in a section
  is the table header.

A section may contain key-value entries or one table, not both.  Blank
lines and ``#`` comments are ignored everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SchemaError


@dataclass
class Section:
    """One parsed ``[name]`` block."""

    name: str
    line: int
    entries: dict[str, str] = field(default_factory=dict)
    header: list[str] | None = None
    rows: list[list[str]] = field(default_factory=list)
    row_lines: list[int] = field(default_factory=list)

    @property
    def is_table(self) -> bool:
        return self.header is not None


def parse(text: str, source: str = "<string>") -> dict[str, Section]:
    """Parse block text into an ordered ``{section name: Section}`` dict.

    Raises
    ------
    SchemaError
        On content outside a section, duplicate section names, mixed
        table/key-value content, or ragged table rows.  Messages carry
        the source name and 1-based line number.
    """
    sections: dict[str, Section] = {}
    current: Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise SchemaError(f"{source}:{lineno}: empty section name")
            if name in sections:
                raise SchemaError(f"{source}:{lineno}: duplicate section [{name}]")
            current = Section(name=name, line=lineno)
            sections[name] = current
            continue
        if current is None:
            raise SchemaError(f"{source}:{lineno}: content before any [section] header")
        if "=" in line:
            if current.header is not None:
                raise SchemaError(
                    f"{source}:{lineno}: key-value entry inside table section [{current.name}]"
                )
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise SchemaError(f"{source}:{lineno}: empty key")
            if key in current.entries:
                raise SchemaError(f"{source}:{lineno}: duplicate key '{key}' in [{current.name}]")
            current.entries[key] = value.strip()
        else:
            cells = [c.strip() for c in line.split(",")]
            if current.entries:
                raise SchemaError(
                    f"{source}:{lineno}: table row inside key-value section [{current.name}]"
                )
            if current.header is None:
                current.header = cells
            else:
                if len(cells) != len(current.header):
                    raise SchemaError(
                        f"{source}:{lineno}: row has {len(cells)} cells, header of "
                        f"[{current.name}] has {len(current.header)}"
                    )
                current.rows.append(cells)
                current.row_lines.append(lineno)
    return sections


def parse_file(path) -> dict[str, Section]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), source=str(path))


def parse_float(section: Section, key: str, raw: str, source: str = "") -> float:
    """Coerce a cell or entry to float with a located error message."""
    try:
        return float(raw)
    except ValueError:
        where = f"{source}: " if source else ""
        raise SchemaError(
            f"{where}section [{section.name}], field '{key}': not a number: {raw!r}"
        ) from None


def format_sections(sections: dict[str, dict[str, str] | tuple[list[str], list[list[str]]]]) -> str:
    """Render sections back to block text.

    Values are ``{name: entries dict}`` for key-value sections or
    ``{name: (header, rows)}`` for tables.
    """
    out: list[str] = []
    for name, body in sections.items():
        out.append(f"[{name}]")
        if isinstance(body, dict):
            for key, value in body.items():
                out.append(f"{key} = {value}")
        else:
            header, rows = body
            out.append(", ".join(header))
            for row in rows:
                out.append(", ".join(str(c) for c in row))
        out.append("")
    return "\n".join(out)
