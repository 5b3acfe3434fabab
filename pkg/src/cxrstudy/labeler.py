"""Rule-based report labeler.

Pipeline: sentence segmentation -> longest-match trigger detection ->
assertion classification by cue proximity -> per-report aggregation with
precedence positive > uncertain > negative. "No Finding" is never
triggered directly; it derives from the absence of positive or uncertain
pathology findings.

Sentence boundaries fall after a run of ``. ? !`` followed by whitespace,
and after ``:`` followed by whitespace. A single period attached to a pure
number token ("1.") is an enumeration marker, not a boundary.

A cue governs a mention when the cue's last token ends at most ``window``
tokens before the mention's first token within the same sentence. The
nearest cue decides the label; a distance tie between a negation and an
uncertainty cue resolves to uncertain. Cues after the mention never
govern it, so "effusion has resolved" stays positive by design; the
regression corpus documents this.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .taxonomy import (
    NO_FINDING,
    SUPPORT_DEVICES,
    AssertionLabel,
    DEFAULT_TAXONOMY,
    FindingTaxonomy,
    LabelVector,
)

__all__ = [
    "Sentence",
    "Mention",
    "Lexicon",
    "parse_lexicon",
    "load_lexicon",
    "segment_sentences",
    "detect_mentions",
    "classify_assertion",
    "label_report",
]

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")
_TERMINATORS = ".?!"


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Mention:
    finding: str
    sentence_index: int
    start: int  # character offsets within the sentence
    end: int
    matched_phrase: str


@dataclass(frozen=True)
class Lexicon:
    version: str
    window: int
    triggers: dict[str, tuple[str, ...]]
    negation_cues: tuple[str, ...]
    uncertainty_cues: tuple[str, ...]
    taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("scope window must be >= 1")
        if not self.negation_cues or not self.uncertainty_cues:
            raise ValueError("cue lists must be non-empty")
        for finding in self.triggers:
            if finding not in self.taxonomy.findings:
                raise ValueError(f"lexicon names unknown finding {finding!r}")
        for finding in self.taxonomy.findings:
            if finding == NO_FINDING:
                continue  # derived, never triggered
            if not self.triggers.get(finding):
                raise ValueError(f"finding {finding!r} has no trigger phrases")
        seen: dict[tuple[str, ...], str] = {}
        for finding, phrases in self.triggers.items():
            for phrase in phrases:
                key = tuple(phrase.lower().split())
                if key in seen and seen[key] != finding:
                    raise ValueError(
                        f"trigger {phrase!r} assigned to both {seen[key]!r} and {finding!r}"
                    )
                seen[key] = finding


def parse_lexicon(text: str, taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY) -> Lexicon:
    """Parse the structured lexicon format (see data/lexicon_v1.txt)."""
    version: Optional[str] = None
    window: Optional[int] = None
    triggers: dict[str, list[str]] = {}
    negation: list[str] = []
    uncertainty: list[str] = []
    section: Optional[str] = None
    current_finding: Optional[str] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            header = line[1:-1].strip()
            if header == "negation" or header == "uncertainty":
                section = header
                current_finding = None
            elif header.startswith("finding:"):
                section = "finding"
                current_finding = header[len("finding:"):].strip()
                triggers.setdefault(current_finding, [])
            else:
                raise ValueError(f"lexicon line {lineno}: unknown section {header!r}")
            continue
        if "=" in line and section is None:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "version":
                version = value
            elif key == "window":
                window = int(value)
            else:
                raise ValueError(f"lexicon line {lineno}: unknown setting {key!r}")
            continue
        if section == "negation":
            negation.append(line.lower())
        elif section == "uncertainty":
            uncertainty.append(line.lower())
        elif section == "finding":
            assert current_finding is not None
            triggers[current_finding].append(line.lower())
        else:
            raise ValueError(f"lexicon line {lineno}: phrase outside any section")

    if version is None or window is None:
        raise ValueError("lexicon must declare version and window")
    return Lexicon(version, window,
                   {f: tuple(ps) for f, ps in triggers.items()},
                   tuple(negation), tuple(uncertainty), taxonomy)


def load_lexicon(path: str | Path | None = None,
                 taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY) -> Lexicon:
    """Load a lexicon file; defaults to the packaged v1 lexicon."""
    if path is None:
        text = resources.files("cxrstudy.data").joinpath("lexicon_v1.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_lexicon(text, taxonomy)


def _is_enumeration_period(text: str, idx: int) -> bool:
    """True when the period at ``idx`` trails a pure-number token."""
    j = idx - 1
    if j < 0 or not text[j].isalnum():
        return False
    start = j
    while start > 0 and text[start - 1].isalnum():
        start -= 1
    return text[start:j + 1].isdigit()


def segment_sentences(text: str) -> list[Sentence]:
    """Split report text into sentences with offsets into the original."""
    boundaries: list[int] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINATORS:
                j += 1
            followed = j + 1 >= n or text[j + 1].isspace()
            enumeration = (j == i and ch == "." and _is_enumeration_period(text, i))
            if followed and not enumeration:
                boundaries.append(j + 1)
            i = j + 1
        elif ch == ":":
            if i + 1 >= n or text[i + 1].isspace():
                boundaries.append(i + 1)
            i += 1
        else:
            i += 1

    sentences: list[Sentence] = []
    prev = 0
    for cut in boundaries + [n]:
        if cut < prev:
            continue
        segment = text[prev:cut]
        stripped = segment.strip()
        if stripped:
            start = prev + len(segment) - len(segment.lstrip())
            sentences.append(Sentence(stripped, start, start + len(stripped)))
        prev = cut
    return sentences


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0).lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _phrase_index(phrases: Sequence[str]) -> dict[str, list[tuple[str, ...]]]:
    """Group tokenized phrases by first token, longest first."""
    index: dict[str, list[tuple[str, ...]]] = {}
    for phrase in phrases:
        toks = tuple(phrase.lower().split())
        if not toks:
            continue
        index.setdefault(toks[0], []).append(toks)
    for bucket in index.values():
        bucket.sort(key=len, reverse=True)
    return index


def _scan_phrases(tokens: Sequence[tuple[str, int, int]],
                  index: dict[str, list[tuple[str, ...]]]) -> list[tuple[int, int, tuple[str, ...]]]:
    """Longest-match, non-overlapping phrase occurrences.

    Returns (first_token_index, last_token_index, phrase_tokens) triples.
    """
    hits: list[tuple[int, int, tuple[str, ...]]] = []
    i = 0
    while i < len(tokens):
        matched = None
        for phrase in index.get(tokens[i][0], ()):
            if len(phrase) <= len(tokens) - i and all(
                    tokens[i + k][0] == phrase[k] for k in range(len(phrase))):
                matched = phrase
                break
        if matched is not None:
            hits.append((i, i + len(matched) - 1, matched))
            i += len(matched)
        else:
            i += 1
    return hits


def _trigger_index(lexicon: Lexicon) -> dict[str, list[tuple[tuple[str, ...], str]]]:
    index: dict[str, list[tuple[tuple[str, ...], str]]] = {}
    for finding, phrases in lexicon.triggers.items():
        for phrase in phrases:
            toks = tuple(phrase.lower().split())
            index.setdefault(toks[0], []).append((toks, finding))
    for bucket in index.values():
        bucket.sort(key=lambda item: len(item[0]), reverse=True)
    return index


def detect_mentions(sentence: str, lexicon: Lexicon,
                    sentence_index: int = 0) -> list[Mention]:
    """All non-overlapping longest-match trigger occurrences, left to right."""
    tokens = _tokenize(sentence)
    index = _trigger_index(lexicon)
    mentions: list[Mention] = []
    i = 0
    while i < len(tokens):
        matched = None
        for phrase, finding in index.get(tokens[i][0], ()):
            if len(phrase) <= len(tokens) - i and all(
                    tokens[i + k][0] == phrase[k] for k in range(len(phrase))):
                matched = (phrase, finding)
                break
        if matched is not None:
            phrase, finding = matched
            start = tokens[i][1]
            end = tokens[i + len(phrase) - 1][2]
            mentions.append(Mention(finding, sentence_index, start, end,
                                    sentence[start:end]))
            i += len(phrase)
        else:
            i += 1
    return mentions


def classify_assertion(sentence: str, mention: Mention, lexicon: Lexicon) -> AssertionLabel:
    """Assign positive/negative/uncertain to one mention by cue proximity."""
    if not (0 <= mention.start < mention.end <= len(sentence)):
        raise ValueError("mention span outside sentence bounds")
    if sentence[mention.start:mention.end] != mention.matched_phrase:
        raise ValueError("mention phrase does not match sentence slice")

    tokens = _tokenize(sentence)
    mention_first = next(
        (idx for idx, (_, s, _) in enumerate(tokens) if s >= mention.start), None)
    if mention_first is None:
        raise ValueError("mention start beyond sentence tokens")

    neg_hits = _scan_phrases(tokens, _phrase_index(lexicon.negation_cues))
    unc_hits = _scan_phrases(tokens, _phrase_index(lexicon.uncertainty_cues))

    def nearest(hits: list[tuple[int, int, tuple[str, ...]]]) -> Optional[int]:
        best: Optional[int] = None
        for _, last, _ in hits:
            if last < mention_first:
                dist = mention_first - last
                if dist <= lexicon.window and (best is None or dist < best):
                    best = dist
        return best

    neg_dist = nearest(neg_hits)
    unc_dist = nearest(unc_hits)
    if unc_dist is not None and (neg_dist is None or unc_dist <= neg_dist):
        return AssertionLabel.UNCERTAIN
    if neg_dist is not None:
        return AssertionLabel.NEGATIVE
    return AssertionLabel.POSITIVE


def label_report(text: str, lexicon: Lexicon | None = None) -> LabelVector:
    """Label a full report; deterministic given (text, lexicon)."""
    if lexicon is None:
        lexicon = load_lexicon()
    taxonomy = lexicon.taxonomy

    best: dict[str, AssertionLabel] = {}
    for s_idx, sentence in enumerate(segment_sentences(text)):
        for mention in detect_mentions(sentence.text, lexicon, s_idx):
            label = classify_assertion(sentence.text, mention, lexicon)
            prev = best.get(mention.finding)
            best[mention.finding] = (label if prev is None
                                     else AssertionLabel.strongest((prev, label)))

    labels: dict[str, AssertionLabel] = {
        finding: best.get(finding, AssertionLabel.NOT_MENTIONED)
        for finding in taxonomy.findings
    }
    pathology_active = any(
        labels[f] in (AssertionLabel.POSITIVE, AssertionLabel.UNCERTAIN)
        for f in taxonomy.findings
        if f not in (NO_FINDING, SUPPORT_DEVICES)
    )
    labels[NO_FINDING] = (AssertionLabel.NOT_MENTIONED if pathology_active
                          else AssertionLabel.POSITIVE)
    return LabelVector.from_dict(labels, taxonomy)
