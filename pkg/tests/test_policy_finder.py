from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policylens.policy_finder import (
    ExtractionConfig,
    NoExtractableText,
    clean_policy_text,
    extract_main_text,
    find_policy_links,
    normalize_url,
    token_f1,
)
from policylens.text import tokenize

FIXTURES = Path(__file__).parent / "fixtures"
PARA = ("We collect the information you provide when you create an account, including "
        "your name and email address, and we use it to run the service.")


def test_privacy_policy_anchor_is_top_candidate():
    html = """<body><a href="/shop">Shop</a><a href="/about">About our data centres</a>
    <footer><a href="/legal/privacy">Privacy Policy</a></footer></body>"""
    links = find_policy_links(html, "https://x.com/")
    assert links[0].url == "https://x.com/legal/privacy"
    assert links[0].matched_keywords == ["privacy", "policy"]
    # 2 anchor hits * 2 + 1 path hit + footer bonus
    assert links[0].score == 6.0
    assert all(c.score > 0 for c in links)


def test_relative_href_resolution():
    links = find_policy_links('<a href="privacy.html">Privacy</a>', "https://x.com/a/")
    assert links[0].url == "https://x.com/a/privacy.html"


def test_multilingual_keyword_match():
    links = find_policy_links('<a href="/de/impressum">Datenschutz</a>', "https://firma.de/")
    assert [c.matched_keywords for c in links] == [["datenschutz"]]


def test_accented_keywords_match_folded_paths():
    html = '<a href="/confidentialite">Politique de confidentialité</a>'
    links = find_policy_links(html, "https://maison.fr/")
    assert "confidentialité" in links[0].matched_keywords
    assert links[0].score == 3.0


def test_ties_keep_document_order_and_duplicates_merge():
    html = """<a href="/privacy-a">Privacy</a><a href="/privacy-b">Privacy</a>
    <a href="/privacy-a#top">Privacy</a><a href="mailto:privacy@x.com">Privacy</a>
    <a href="javascript:void(0)">Privacy</a>"""
    links = find_policy_links(html, "https://x.com/")
    assert [c.url for c in links] == ["https://x.com/privacy-a", "https://x.com/privacy-b"]


def test_unparseable_href_is_skipped(caplog):
    html = '<a href="ftp://files.x.com/privacy.txt">Privacy</a><a href="/privacy">Privacy</a>'
    links = find_policy_links(html, "https://x.com/")
    assert [c.url for c in links] == ["https://x.com/privacy"]
    assert "skipping unparseable href" in caplog.text


def test_base_url_must_be_absolute():
    with pytest.raises(ValueError):
        find_policy_links("<a href='/p'>Privacy</a>", "/relative/")


def test_config_file_overrides_keywords(tmp_path):
    path = tmp_path / "extraction.json"
    path.write_text(json.dumps({"min_block_words": 5, "keyword_lists": {"english": ["privacy"], "multilingual": ["sekretess"]}}))
    cfg = ExtractionConfig.from_file(path)
    assert cfg.min_block_words == 5
    assert cfg.keywords == ["privacy", "sekretess"]
    assert find_policy_links('<a href="/x">Sekretess</a>', "https://x.se/", cfg)[0].matched_keywords == ["sekretess"]


@pytest.mark.parametrize("kwargs", [{"min_block_words": 0}, {"max_link_density": 1.5}, {"max_lead_blocks": -1}])
def test_extraction_config_ranges(kwargs):
    with pytest.raises(ValueError):
        ExtractionConfig(**kwargs)


def test_url_normalization():
    assert normalize_url("HTTPS://Example.COM/Path#frag") == "https://example.com/Path"
    assert normalize_url("../b?q=1", "https://x.com/a/c/") == "https://x.com/a/b?q=1"
    with pytest.raises(ValueError):
        normalize_url("relative/only")


@given(st.sampled_from(["/a", "b/c", "../d?x=1", "https://Other.org/E#f", "?q", "./g/h#i"]),
       st.sampled_from(["https://x.com/", "http://Y.org/p/q", "https://z.net/a/b/c"]))
def test_url_normalization_idempotent_and_absolute(href, base):
    once = normalize_url(href, base)
    assert normalize_url(once) == once
    assert once.startswith(("http://", "https://"))


def test_nav_plus_paragraphs_keeps_only_paragraphs():
    nav = "".join(f'<li><a href="/n{i}">Item {i}</a></li>' for i in range(20))
    paras = [f"{PARA} Paragraph number {i} adds a few more words here." for i in range(5)]
    html = (f"<html><body><nav><ul>{nav}</ul></nav><main>"
            + "".join(f"<p>{p}</p>" for p in paras)
            + '</main><footer><a href="/privacy">Privacy</a> <a href="/terms">Terms</a></footer></body></html>')
    assert extract_main_text(html) == "\n\n".join(paras)


def test_single_paragraph_verbatim():
    assert extract_main_text(f"<p>{PARA}</p>") == PARA


def test_entities_decoded_and_whitespace_normalised():
    html = "<p>We   share data with\n partners &amp; processors only when you agree, and we keep a record of every request.</p>"
    assert extract_main_text(html) == ("We share data with partners & processors only when you agree, "
                                       "and we keep a record of every request.")


def test_link_only_page_raises():
    nav = "".join(f'<a href="/n{i}">Item {i}</a> ' for i in range(20))
    with pytest.raises(NoExtractableText, match="no extractable text"):
        extract_main_text(f"<nav>{nav}</nav>")
    with pytest.raises(NoExtractableText):
        extract_main_text("<html><body><script>var x = 1;</script></body></html>")


def test_single_gap_is_smoothed():
    links = " ".join(f'<a href="/{i}">l{i}</a>' for i in range(6))
    html = f"<p>{PARA}</p><div>{links}</div><p>{PARA}</p>"
    assert extract_main_text(html).count("l3") == 1


def test_title_and_date_before_content_are_kept():
    html = (f"<nav><a href='/'>Home</a> <a href='/b'>Blog</a></nav><h1>Acme Privacy Policy</h1>"
            f"<p>Last updated: May 1, 2022</p><h2>Collection</h2><p>{PARA}</p><p>© Acme</p>")
    text = extract_main_text(html)
    assert text.startswith("Acme Privacy Policy\n\nLast updated: May 1, 2022\n\nCollection")
    assert "© Acme" not in text and "Home" not in text


def _fixture_pages():
    pages = sorted((FIXTURES / "extraction").glob("page*.html"))
    assert len(pages) >= 10
    return pages


def test_extracted_tokens_come_from_the_document():
    for page in _fixture_pages():
        html = page.read_text(encoding="utf-8")
        from bs4 import BeautifulSoup

        doc_tokens = set(tokenize(BeautifulSoup(html, "html.parser").get_text(" ")))
        assert set(tokenize(extract_main_text(html))) <= doc_tokens


def test_fixture_corpus_f1():
    scores = []
    for page in _fixture_pages():
        gold = page.with_name(page.name.replace(".html", ".gold.txt")).read_text(encoding="utf-8")
        scores.append(token_f1(clean_policy_text(extract_main_text(page.read_bytes())), gold))
    assert sum(scores) / len(scores) >= 0.75


def test_repeated_footer_line_removed():
    text = "\n".join(["Intro line.", "© Acme 2023", "Body one.", "© Acme 2023", "Body two.",
                      "© Acme 2023", "Body three.", "© Acme 2023"])
    assert clean_policy_text(text) == "Intro line.\nBody one.\nBody two.\nBody three."


def test_clean_text_unchanged_and_empty():
    clean = "Privacy Policy\n\nWe collect data.\nWe share data."
    assert clean_policy_text(clean) == clean
    assert clean_policy_text("") == ""


def test_quotes_dashes_and_banner_lines():
    text = "We use cookies to improve your experience. Accept all\nAccept\n“Personal data” – any information.\n\n\n\nEnd."
    assert clean_policy_text(text) == '"Personal data" - any information.\n\nEnd.'


def test_clean_idempotent_on_fixture_set():
    for page in _fixture_pages():
        once = clean_policy_text(extract_main_text(page.read_bytes()))
        assert clean_policy_text(once) == once


@settings(max_examples=200)
@given(st.lists(st.sampled_from(["© Acme", "Accept all", "We collect data.", "", "  spaced   line ",
                                 "“quoted” – dash", "Reject", "Body text here."]), max_size=25))
def test_clean_idempotent_property(lines):
    text = "\n".join(lines)
    once = clean_policy_text(text)
    assert clean_policy_text(once) == once


def test_token_f1_edges():
    assert token_f1("a b c", "a b c") == 1.0
    assert token_f1("", "") == 1.0
    assert token_f1("x", "y") == 0.0
    assert token_f1("a b", "a c") == pytest.approx(0.5)
