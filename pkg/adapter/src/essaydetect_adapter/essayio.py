"""The file-format surface shared with the essaydetect toolkit.

Only formats are shared, never code: the Essay line format read here and
the sentence segmentation rule (a ``.``, ``!`` or ``?`` terminates a
sentence unless it sits between two alphanumeric characters) intentionally
mirror the toolkit's definitions.
"""

import json
from dataclasses import dataclass
from pathlib import Path

_TERMINATORS = frozenset(".!?")


@dataclass(frozen=True)
class Essay:
    id: str
    prompt_id: str
    source: str
    text: str


def read_corpus(path):
    path = Path(path)
    essays = []
    seen = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: not valid JSON ({exc.msg})") from exc
            if lineno == 1 and isinstance(obj, dict) and set(obj) == {"_meta"}:
                continue
            missing = [f for f in ("id", "prompt_id", "source", "text") if f not in obj]
            if missing:
                raise ValueError(f"{path}: line {lineno}: missing field(s) {', '.join(missing)}")
            if obj["id"] in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate id \"{obj['id']}\"")
            seen.add(obj["id"])
            if not str(obj["text"]).strip():
                raise ValueError(f"{path}: line {lineno}: empty text for id \"{obj['id']}\"")
            essays.append(Essay(str(obj["id"]), str(obj["prompt_id"]), str(obj["source"]), str(obj["text"])))
    return essays


def split_sentences(text):
    """Raw sentence substrings under the shared terminator rule."""
    n = len(text)
    sentences = []
    seg_start = 0
    for i, ch in enumerate(text):
        if ch in _TERMINATORS:
            prev_alnum = i > 0 and text[i - 1].isalnum()
            next_alnum = i + 1 < n and text[i + 1].isalnum()
            if prev_alnum and next_alnum:
                continue
            segment = text[seg_start : i + 1].strip()
            if any(c.isalnum() for c in segment):
                sentences.append(segment)
            seg_start = i + 1
    tail = text[seg_start:].strip()
    if any(c.isalnum() for c in tail):
        sentences.append(tail)
    return sentences
