# app/ml/preprocessing.py
import html
import re
import unicodedata

_QUOTES = str.maketrans({"‘": "'", "’": "'", "ʼ": "'", "“": '"', "”": '"'})


def normalize_unicode(text: str) -> str:
    """Normalize unicode using NFKC form."""
    return unicodedata.normalize("NFKC", text)


def collapse_whitespace(text: str) -> str:
    """Collapse runs of whitespace into a single space."""
    return re.sub(r"\s+", " ", text).strip()


def drop_bare_urls(text: str) -> str:
    """Remove plain URLs (e.g. https://example.com)."""
    return re.sub(r"https?://\S+", " ", text)


def decode_html_entities(text: str) -> str:
    """Turn HTML entities like &amp; or &quot; into actual characters."""
    return html.unescape(text)


def strip_nonbreaking_spaces(text: str) -> str:
    """Convert non-breaking spaces (U+00A0) to normal space."""
    return text.replace("\xa0", " ")


def remove_control_chars(text: str) -> str:
    return re.sub(r"[\x00-\x08\x0b-\x1f\x7f]", "", text)


def fold_quotes(text: str) -> str:
    """Map curly apostrophes and quotes to their ASCII forms."""
    return text.translate(_QUOTES)


def clean_text(
    text: str,
    *,
    normalize=True,
    strip_nbsp=True,
    decode_entities=True,
    remove_urls=True,
    strip_controls=True,
    fold=True,
    casefold=False,
    collapse_ws=True,
) -> str:
    """Apply a full suite of text cleaning steps."""
    if decode_entities:
        text = decode_html_entities(text)
    if normalize:
        text = normalize_unicode(text)
    if strip_nbsp:
        text = strip_nonbreaking_spaces(text)
    if remove_urls:
        text = drop_bare_urls(text)
    if strip_controls:
        text = remove_control_chars(text)
    if fold:
        text = fold_quotes(text)
    if casefold:
        text = text.casefold()
    if collapse_ws:
        text = collapse_whitespace(text)
    return text


def normalize_keyword(keyword: str) -> str:
    """Canonical form of a rule keyword; profiles are matched in the same form."""
    return clean_text(keyword, remove_urls=False, casefold=True)


def prepare_profile(description: str) -> str:
    return clean_text(description, casefold=True)
