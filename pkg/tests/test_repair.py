import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import erased_word
from tornmend.harness import render_document
from tornmend.errors import Ambiguous, LowConfidence, NoCompletion
from tornmend.repair import (GlyphAtlas, WordCandidate, complete_word, default_dictionary,
                             find_damaged_words, recognize_glyph, render_repair, repair_image)




def ncc(a, b):
    a = a.astype(float).ravel() - a.mean()
    b = b.astype(float).ravel() - b.mean()
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))


# -- atlas and recognition -------------------------------------------------

def test_atlas_shape(atlas):
    assert len(atlas.charset) == 62
    assert {g.shape for g in atlas.glyphs.values()} == {(atlas.cell_h, atlas.cell_w)}
    with pytest.raises(ValueError):
        GlyphAtlas("ab", {"a": atlas.bitmap("a")}, 16, 16, 24)
    with pytest.raises(ValueError):
        GlyphAtlas("a", {"a": np.zeros((3, 3), bool)}, 16, 16, 24)


def test_every_glyph_recognises_itself(atlas):
    for ch in atlas.charset:
        got, score = recognize_glyph(atlas.bitmap(ch), atlas)
        assert got == ch and score >= 0.99


def test_noisy_glyph_is_still_recognised(atlas):
    rng = np.random.default_rng(8)
    for ch in atlas.charset:
        gray = np.where(atlas.bitmap(ch), 0.0, 255.0) + rng.normal(0.0, 8.0, atlas.bitmap(ch).shape)
        cell = np.clip(np.floor(gray + 0.5), 0, 255).astype(np.uint8)
        assert recognize_glyph(cell, atlas)[0] == ch


def test_blank_cell_is_low_confidence(atlas):
    with pytest.raises(LowConfidence):
        recognize_glyph(np.zeros((atlas.cell_h, atlas.cell_w), bool), atlas)


def test_resized_cell_is_recognised(atlas):
    big = np.kron(atlas.bitmap("Q"), np.ones((2, 2), bool))
    assert recognize_glyph(big, atlas)[0] == "Q"


# -- completion ------------------------------------------------------------

def test_unique_completion_from_bundled_list():
    words = default_dictionary()
    assert complete_word("recogni?e", words) == "recognize"


def test_no_wildcard_is_identity():
    assert complete_word("anything", ["other"]) == "anything"


def test_constructed_tie_is_ambiguous():
    with pytest.raises(Ambiguous) as exc:
        complete_word("?at", ["cat", "hat", "cart"])
    assert sorted(exc.value.hits) == ["cat", "hat"]


def test_no_hit_is_no_completion():
    with pytest.raises(NoCompletion):
        complete_word("?zzq", ["cat"])


def test_case_is_kept():
    assert complete_word("Hou?e", ["house"]) == "House"
    assert complete_word("HOU?E", ["house"]) == "HOUSE"


@given(st.sampled_from(default_dictionary()), st.data())
def test_completion_agrees_with_observed_letters(word, data):
    k = data.draw(st.integers(0, len(word) - 1))
    pattern = word[:k] + "?" + word[k + 1:]
    try:
        got = complete_word(pattern, default_dictionary())
    except Ambiguous as exc:
        assert word.lower() in exc.hits
        return
    assert got.lower() == word.lower()
    assert all(p == "?" or p == g for p, g in zip(pattern, got))


def test_damaged_count_counts_wildcards():
    assert WordCandidate([(0, 0, 1, 1)] * 4, "a??b").damaged_count == 2


# -- finding and redrawing -------------------------------------------------

def test_no_gap_no_words(atlas):
    page = render_document("cabbage", atlas, width=240, height=120)
    assert find_damaged_words(page, np.zeros(page.pixels.shape, bool), atlas) == []


def test_gap_away_from_text_finds_nothing(atlas):
    page = render_document("cabbage", atlas, width=400, height=300)
    gap = np.zeros(page.pixels.shape, bool)
    gap[250:260, 300:320] = True
    assert find_damaged_words(page, gap, atlas) == []


def test_erased_glyph_gives_one_candidate(atlas):
    _, damaged, gap = erased_word("elephant", 3, atlas)
    words = find_damaged_words(damaged, gap, atlas)
    assert len(words) == 1
    assert words[0].text == "ele?hant"
    assert words[0].damaged_count == 1


def test_repair_restores_the_cell_and_nothing_else(atlas):
    original, damaged, gap = erased_word("elephant", 3, atlas)
    out = repair_image(damaged, gap, atlas)
    assert [c for _, c, _ in out.repaired] == ["elephant"]
    (top, left, bottom, right), = [b for b, t in zip(out.repaired[0][2], "ele?hant") if t == "?"]
    assert ncc(out.image.pixels[top:bottom, left:right], original.pixels[top:bottom, left:right]) >= 0.9
    outside = np.ones(gap.shape, bool)
    outside[top:bottom, left:right] = False
    assert np.array_equal(out.image.pixels[outside], damaged.pixels[outside])


def test_render_without_completions_is_identity(atlas):
    _, damaged, _ = erased_word("garden", 2, atlas)
    cand = WordCandidate([(40, 40 + 16 * i, 64, 56 + 16 * i) for i in range(6)], "garden")
    assert render_repair(damaged, cand, "garden", atlas) == damaged


def test_ambiguous_words_are_reported_not_drawn(atlas):
    _, damaged, gap = erased_word("cat", 0, atlas)
    out = repair_image(damaged, gap, atlas, ["cat", "hat"])
    assert out.repaired == []
    assert out.ambiguous == [("?at", ("cat", "hat"))]
    assert out.image == damaged
