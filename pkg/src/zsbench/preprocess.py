"""Text cleaning and tokenization ahead of feature extraction.

Cleaning applies removal rules in a fixed order (URLs, HTML tags, mentions,
hashtags, digits, punctuation), each replacing the matched span with a
space, then lowercases and collapses whitespace. Replacing instead of
deleting keeps the pipeline idempotent: a later rule can never splice two
fragments into a match for an earlier one.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass
from importlib import resources

from .dataset import LabeledCorpus
from .porter import stem

_URL_RE = re.compile(r"(?:https?://|www\.)\S+|\bt\.co/\S+", re.IGNORECASE)
_HTML_TAG_RE = re.compile(r"<[^<>]*>")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_DIGIT_RE = re.compile(r"\d+")
_PUNCT_RE = re.compile(r"[^\w\s]")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleaningPolicy:
    """Which removal rules apply. Lowercasing always applies."""

    remove_urls: bool = True
    remove_html_tags: bool = True
    remove_digits: bool = True
    remove_hashtags: bool = True
    remove_mentions: bool = True
    remove_punctuation: bool = True
    remove_stopwords: bool = True
    apply_stemming: bool = True

    @classmethod
    def identity(cls) -> "CleaningPolicy":
        """All rules off: lowercase whitespace tokenization only."""
        return cls(**{f: False for f in cls.__dataclass_fields__})

    @classmethod
    def tweet_cleaning(cls) -> "CleaningPolicy":
        """The tweet-cleaning recipe: urls, html tags, digits, hashtags,
        mentions and stop words removed; text otherwise left readable."""
        return cls(remove_punctuation=False, apply_stemming=False)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, data: dict) -> "CleaningPolicy":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown cleaning policy flags: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class CleanedDocument:
    """Preprocessed form of a document: ordered lowercase tokens."""

    id: int
    tokens: tuple[str, ...]

    @property
    def is_empty(self) -> bool:
        return not self.tokens


def _load_stopwords() -> frozenset[str]:
    text = resources.files("zsbench").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


def clean_text(text: str, policy: CleaningPolicy) -> str:
    """Apply the policy's removal rules in fixed order and lowercase.

    Idempotent: cleaning an already-clean string is a no-op.
    """
    if policy.remove_urls:
        text = _URL_RE.sub(" ", text)
    if policy.remove_html_tags:
        text = _HTML_TAG_RE.sub(" ", text)
    if policy.remove_mentions:
        text = _MENTION_RE.sub(" ", text)
    if policy.remove_hashtags:
        text = _HASHTAG_RE.sub(" ", text)
    if policy.remove_digits:
        text = _DIGIT_RE.sub(" ", text)
    if policy.remove_punctuation:
        text = _PUNCT_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip().lower()


def normalize_tokens(text: str, policy: CleaningPolicy) -> list[str]:
    """Tokenize cleaned text, dropping stop words and stemming per policy."""
    tokens = text.lower().split()
    if policy.remove_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    if policy.apply_stemming:
        tokens = [stem(t) for t in tokens]
    return tokens


def preprocess_corpus(
    corpus: LabeledCorpus, policy: CleaningPolicy
) -> tuple[list[CleanedDocument], int]:
    """Clean and tokenize every document, preserving order and ids.

    Returns (cleaned documents, count of documents reduced to zero tokens).
    """
    cleaned = []
    n_empty = 0
    for doc in corpus.documents:
        tokens = normalize_tokens(clean_text(doc.text, policy), policy)
        if not tokens:
            n_empty += 1
        cleaned.append(CleanedDocument(id=doc.id, tokens=tuple(tokens)))
    return cleaned, n_empty


def clean_for_prompt(text: str, policy: CleaningPolicy) -> str:
    """Cleaned single-string form of a text, for sending to an LLM."""
    return " ".join(normalize_tokens(clean_text(text, policy), policy))
