"""Merge identities, boundary locality, and end-to-end bilingual synthesis."""

import numpy as np
import pytest

from adaptts.adapter import AdapterConfig, AdapterParams, forward
from adaptts.backbone import BackboneConfig, FrozenTTSBackbone
from adaptts.codeswitch import contextualize_zero_rows, merge, synthesize_cs
from adaptts.errors import ConfigError
from adaptts.text import LanguageMask, build_vocab, encode, parse_code_switch

CODE_SWITCH_SENTENCES = [
    "Am avut un call~ with the client today ~și a durat două ore.",
    "Poți să-mi trimiți și mie un link~ to that ~te rog?",
    "Săptămâna asta vreau să mă relaxez~ and maybe watch a movie or something.",
    "E super~ annoying ~când nu răspunde lumea la mail.",
    "Îți fac un~ update ~pe mâine dimineață după ce vorbesc cu ei.",
    "Nu știu dacă are sens dar~ let's try anyway.",
    "A zis că ~deadline~-ul pe vineri dar ~actually~ nu cred că termină.",
    "Mă duc să iau un ~coffee to go~ și vin imediat ~brother~.",
    "Am avut un ~meeting super early~ și nici nu am apucat să mănânc.",
]

ROMANIAN_CHARS = sorted(set("".join(CODE_SWITCH_SENTENCES)) - {"~"})


@pytest.fixture
def vocab_r():
    return build_vocab(ROMANIAN_CHARS, filler="_")


@pytest.fixture
def backbone():
    return FrozenTTSBackbone(
        BackboneConfig(hidden_dim=8, mel_dim=4, time_dim=4, n_blocks=2, kernel_size=3, seed=3)
    )


def make_params(vocab, randomize=False, seed=5):
    cfg = AdapterConfig(vocab_size=len(vocab), embed_dim=8, hidden_dim=8, n_blocks=2, kernel_size=3, seed=2)
    params = AdapterParams(cfg)
    if randomize:
        rng = np.random.default_rng(seed)
        for p in params.parameters():
            p.tensor.data[:] = rng.standard_normal(p.tensor.shape).astype(np.float32) * 0.3
    return params


class TestMergeIdentities:
    def test_monolingual_romanian_equals_plain_forward_bitwise(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=True)
        seq = encode("salut frate", vocab_r)
        mask = LanguageMask.all_romanian(len(seq))
        merged = merge(seq, mask, params, backbone)
        plain = forward(seq, params)
        np.testing.assert_array_equal(merged.h_cs.data, plain.data)
        assert merged.provenance == tuple("R" * len(seq))

    def test_all_english_equals_contextualized_zero_plus_rows(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=True)
        text = "~hello there~"
        seq, mask = parse_code_switch(text, vocab_r, backbone.vocab)
        merged = merge(seq, mask, params, backbone)
        h_zero = contextualize_zero_rows(params, len(seq))
        frozen_rows = backbone.embed_table.data[list(seq.ids)]
        np.testing.assert_array_equal(merged.h_cs.data, h_zero.data + frozen_rows)

    def test_all_english_at_identity_init_equals_frozen_rows_bitwise(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=False)
        seq, mask = parse_code_switch("~sample text~", vocab_r, backbone.vocab)
        merged = merge(seq, mask, params, backbone)
        np.testing.assert_array_equal(
            merged.h_cs.data, backbone.embed_table.data[list(seq.ids)]
        )

    def test_empty_english_span_equals_monolingual(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=True)
        seq_a, mask_a = parse_code_switch("salut~~ lume", vocab_r, backbone.vocab)
        seq_b, mask_b = parse_code_switch("salut lume", vocab_r, backbone.vocab)
        assert seq_a.ids == seq_b.ids
        a = merge(seq_a, mask_a, params, backbone)
        b = merge(seq_b, mask_b, params, backbone)
        np.testing.assert_array_equal(a.h_cs.data, b.h_cs.data)

    def test_mask_length_mismatch(self, vocab_r, backbone):
        params = make_params(vocab_r)
        seq = encode("abc", vocab_r)
        with pytest.raises(ConfigError):
            merge(seq, LanguageMask((1, 0), (0, 1)), params, backbone)


class TestBoundaryLocality:
    def test_changing_english_char_only_touches_h_e_at_that_position(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=True)
        base_text = "am un ~call~ azi"
        alt_text = "am un ~ball~ azi"
        seq_a, mask = parse_code_switch(base_text, vocab_r, backbone.vocab)
        seq_b, _ = parse_code_switch(alt_text, vocab_r, backbone.vocab)
        a = merge(seq_a, mask, params, backbone).h_cs.data
        b = merge(seq_b, mask, params, backbone).h_cs.data
        # The adapter path sees zeros at English positions either way, so the
        # two merges differ exactly at the edited position via h_E.
        changed = np.where(np.any(a != b, axis=1))[0]
        edit_pos = next(i for i, (x, y) in enumerate(zip(seq_a.ids, seq_b.ids)) if x != y)
        np.testing.assert_array_equal(changed, [edit_pos])

    def test_contextualize_zero_interior_rows_equal(self, vocab_r):
        params = make_params(vocab_r, randomize=True)
        radius = params.config.receptive_radius
        length = 2 * radius + 7
        out = contextualize_zero_rows(params, length).data
        interior = out[radius : length - radius]
        for row in interior[1:]:
            np.testing.assert_array_equal(row, interior[0])


class TestSynthesizeCs:
    def test_monolingual_matches_plain_pipeline(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=True)
        text = "o zi buna"
        mel_cs = synthesize_cs(text, vocab_r, params, backbone, n_steps=4, seed=17)
        seq = encode(text, vocab_r)
        mel_plain = backbone.sample(forward(seq, params), len(seq), 4, seed=17)
        np.testing.assert_array_equal(mel_cs.frames, mel_plain.frames)

    @pytest.mark.parametrize("text", CODE_SWITCH_SENTENCES)
    def test_annotated_sentences_run_end_to_end(self, text, vocab_r, backbone):
        params = make_params(vocab_r)
        mel = synthesize_cs(text, vocab_r, params, backbone, n_steps=2, seed=1)
        assert mel.frames.shape == (len(text.replace("~", "")), 4)
        assert np.all(np.isfinite(mel.frames))

    def test_padding_to_frames(self, vocab_r, backbone):
        params = make_params(vocab_r)
        mel = synthesize_cs("scurt", vocab_r, params, backbone, n_steps=2, seed=1, n_frames=12)
        assert mel.frames.shape == (12, 4)

    def test_deterministic_for_fixed_seed(self, vocab_r, backbone):
        params = make_params(vocab_r, randomize=True)
        text = CODE_SWITCH_SENTENCES[0]
        a = synthesize_cs(text, vocab_r, params, backbone, n_steps=3, seed=9)
        b = synthesize_cs(text, vocab_r, params, backbone, n_steps=3, seed=9)
        np.testing.assert_array_equal(a.frames, b.frames)
