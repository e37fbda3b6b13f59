"""Shell command parsing, error detection, and solution matching.

Commands are split on unquoted ``|``, ``;``, ``&&`` and ``||`` into pipeline
segments; each segment is tokenized honoring single and double quotes. The
first token of a segment is the tool, ``-``-prefixed tokens are options, and
everything else (environment assignments, redirections, values) counts as an
argument. No attempt is made to bind option values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:  # pragma: no cover
    from .ingest import SessionRecord, StreamEntry

DEFAULT_ERROR_PATTERNS = (
    "command not found",
    "No such file or directory",
    "Permission denied",
    "syntax error",
    "Operation not permitted",
)

_QUOTES = "'\""
_UNSAFE = set(" \t\n|;&'\"")


@dataclass
class CommandSegment:
    """One pipeline stage: tool name, option tokens, argument tokens."""

    tool: str
    options: list[str] = field(default_factory=list)
    arguments: list[str] = field(default_factory=list)

    @property
    def tokens(self) -> list[str]:
        return [self.tool, *self.options, *self.arguments]


@dataclass
class ParsedCommand:
    raw: str
    segments: list[CommandSegment]
    quote_warning: bool = False


def _tokenize(text: str) -> tuple[list[list[str]], bool]:
    """Scan text into per-segment token lists. Returns (segments, warning).

    The warning flips on an unterminated quote; the dangling span is kept as
    part of the current token (best effort).
    """
    segments: list[list[str]] = [[]]
    token: list[str] = []
    has_token = False
    quote: str | None = None
    i = 0
    n = len(text)

    def flush_token():
        nonlocal has_token
        if has_token:
            segments[-1].append("".join(token))
        token.clear()
        has_token = False

    def break_segment():
        flush_token()
        if segments[-1]:
            segments.append([])

    while i < n:
        ch = text[i]
        if quote is not None:
            if ch == quote:
                quote = None
            else:
                token.append(ch)
        elif ch in _QUOTES:
            quote = ch
            has_token = True
        elif ch.isspace():
            flush_token()
        elif ch == ";":
            break_segment()
        elif ch == "|":
            if i + 1 < n and text[i + 1] == "|":
                i += 1
            break_segment()
        elif ch == "&" and i + 1 < n and text[i + 1] == "&":
            i += 1
            break_segment()
        else:
            token.append(ch)
            has_token = True
        i += 1

    warning = quote is not None
    flush_token()
    if not segments[-1]:
        segments.pop()
    return segments, warning


def parse_command(text: str) -> ParsedCommand:
    """Parse one command line into pipeline segments.

    Requires text containing at least one token. An unterminated quote is
    parsed best-effort and flagged via ``quote_warning``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ValueError("command text must be non-empty")
    token_segments, warning = _tokenize(text)
    if not token_segments:
        raise ValueError(f"no tokens in command {text!r}")
    segments = []
    for tokens in token_segments:
        tool = tokens[0]
        options = [t for t in tokens[1:] if t.startswith("-")]
        arguments = [t for t in tokens[1:] if not t.startswith("-")]
        segments.append(CommandSegment(tool, options, arguments))
    return ParsedCommand(raw=text, segments=segments, quote_warning=warning)


def quote_token(token: str) -> str:
    """Quote a token so the tokenizer reads it back verbatim."""
    if token and not (set(token) & _UNSAFE):
        return token
    if "'" not in token:
        return f"'{token}'"
    if '"' not in token:
        return f'"{token}"'
    # Mixed quotes: wrap single-quote characters in double quotes.
    parts = []
    for ch in token:
        if ch == "'":
            parts.append('"\'"')
        else:
            parts.append(f"'{ch}'")
    return "".join(parts)


def render_command(parsed: ParsedCommand) -> str:
    """Serialize segments token-by-token; parse(render(p)) is a fixed point."""
    rendered = []
    for seg in parsed.segments:
        rendered.append(" ".join(quote_token(t) for t in seg.tokens))
    return " | ".join(rendered)


def detect_error(output_text: str, patterns: Iterable[str] | None = None) -> bool:
    """True when the output contains any error pattern (case-insensitive)."""
    if patterns is None:
        patterns = DEFAULT_ERROR_PATTERNS
    haystack = (output_text or "").lower()
    return any(p.lower() in haystack for p in patterns)


@dataclass(frozen=True)
class SolutionSpec:
    """An accepted solution command for one task.

    ``required_arguments`` entries are literal strings unless prefixed with
    ``re:``, in which case the rest is a regex matched against the whole
    argument. ``match_mode`` is "subset" (the segment may carry extras) or
    "exact" (options equal as sets; arguments and required patterns must
    cover each other).
    """

    task_id: str
    tool: str
    required_options: tuple[str, ...] = ()
    required_arguments: tuple[str, ...] = ()
    match_mode: str = "subset"

    def __post_init__(self):
        if self.match_mode not in ("subset", "exact"):
            raise ValueError(f"unknown match mode {self.match_mode!r}")

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "required_options": list(self.required_options),
            "required_arguments": list(self.required_arguments),
            "match_mode": self.match_mode,
        }


def _argument_matches(pattern: str, argument: str) -> bool:
    if pattern.startswith("re:"):
        return re.fullmatch(pattern[3:], argument) is not None
    return pattern == argument


def _segment_matches(seg: CommandSegment, spec: SolutionSpec) -> bool:
    if seg.tool != spec.tool:
        return False
    options = set(seg.options)
    required_options = set(spec.required_options)
    if spec.match_mode == "subset":
        if not required_options <= options:
            return False
        return all(
            any(_argument_matches(req, arg) for arg in seg.arguments)
            for req in spec.required_arguments
        )
    if options != required_options:
        return False
    covered = all(
        any(_argument_matches(req, arg) for arg in seg.arguments)
        for req in spec.required_arguments
    )
    covering = all(
        any(_argument_matches(req, arg) for req in spec.required_arguments)
        for arg in seg.arguments
    )
    return covered and covering


def match_solution(parsed: ParsedCommand, spec: SolutionSpec) -> bool:
    """True when any segment of the command satisfies the spec."""
    return any(_segment_matches(seg, spec) for seg in parsed.segments)


def load_solution_specs(doc: dict) -> dict[str, list[SolutionSpec]]:
    """Parse a JSON document keyed by task_id into SolutionSpec lists."""
    if not isinstance(doc, dict):
        raise ValueError("solutions must be a JSON object keyed by task_id")
    specs: dict[str, list[SolutionSpec]] = {}
    for task_id, raw in doc.items():
        entries = raw if isinstance(raw, list) else [raw]
        parsed = []
        for entry in entries:
            if not isinstance(entry, dict) or "tool" not in entry:
                raise ValueError(f"bad solution spec for task {task_id!r}")
            parsed.append(
                SolutionSpec(
                    task_id=task_id,
                    tool=entry["tool"],
                    required_options=tuple(entry.get("required_options", ())),
                    required_arguments=tuple(entry.get("required_arguments", ())),
                    match_mode=entry.get("match_mode", "subset"),
                )
            )
        specs[task_id] = parsed
    return specs


@dataclass(frozen=True)
class TaskCompletion:
    """Earliest clean solution match for one task within a session."""

    task_id: str
    timestamp: int
    entry_index: int


def detect_task_completions(
    session: "SessionRecord",
    solutions: dict[str, list[SolutionSpec]],
    error_patterns: Iterable[str] | None = None,
) -> list[TaskCompletion]:
    """Scan an edurange_style session for completed tasks.

    For each task, the first entry (in time order) whose parsed input matches
    one of the task's solution specs and whose output is not an error marks
    the completion. Entries are matched against every task's specs regardless
    of the task id they carry. At most one completion per task, sorted by
    timestamp.
    """
    pending = {task: specs for task, specs in solutions.items()}
    completions = []
    for index, entry in enumerate(session.commands):
        if not pending:
            break
        try:
            parsed = parse_command(entry.input_text)
        except ValueError:
            continue
        if detect_error(entry.output_text, error_patterns):
            continue
        for task in list(pending):
            if any(match_solution(parsed, spec) for spec in pending[task]):
                completions.append(TaskCompletion(task, entry.timestamp, index))
                del pending[task]
    completions.sort(key=lambda c: (c.timestamp, c.task_id))
    return completions
