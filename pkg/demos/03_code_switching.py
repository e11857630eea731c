"""Bilingual conditioning: parse switch-annotated text, merge both paths.

The switch character toggles between the trainable Romanian path and the
frozen English embedding; the merged sequence is their sum. The script
shows the masks, the merge identities, and an end-to-end bilingual
synthesis for a batch of annotated sentences.
"""

import numpy as np

from adaptts.adapter import AdapterConfig, AdapterParams, forward
from adaptts.backbone import BackboneConfig, FrozenTTSBackbone
from adaptts.codeswitch import merge, synthesize_cs
from adaptts.text import LanguageMask, build_vocab, encode, parse_code_switch

SENTENCES = [
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

vocab_r = build_vocab(sorted(set("".join(SENTENCES)) - {"~"}), filler="_")
backbone = FrozenTTSBackbone(BackboneConfig(hidden_dim=32, mel_dim=16, seed=0))
adapter = AdapterParams(AdapterConfig(vocab_size=len(vocab_r), seed=0))

# Visualize the language mask of the first sentence.
text = SENTENCES[0]
seq, mask = parse_code_switch(text, vocab_r, backbone.vocab)
stripped = text.replace("~", "")
print(stripped)
print("".join("E" if e else "." for e in mask.english), "  (E = frozen English path)")

# Identity 1: without any switch, merge is exactly the adapter forward.
mono = encode("o zi foarte buna", vocab_r)
merged = merge(mono, LanguageMask.all_romanian(len(mono)), adapter, backbone)
assert np.array_equal(merged.h_cs.data, forward(mono, adapter).data)
print("monolingual merge == plain adapter forward (bitwise)")

# Identity 2: at identity-init the all-English merge is the frozen rows.
seq_e, mask_e = parse_code_switch("~plain english here~", vocab_r, backbone.vocab)
all_english = merge(seq_e, mask_e, adapter, backbone)
assert np.array_equal(all_english.h_cs.data, backbone.embed_table.data[list(seq_e.ids)])
print("all-English merge at init == frozen embedding rows (bitwise)")

# End-to-end: every annotated sentence synthesizes deterministically.
for text in SENTENCES:
    mel = synthesize_cs(text, vocab_r, adapter, backbone, n_steps=8, seed=3)
    n_english = sum(parse_code_switch(text, vocab_r, backbone.vocab)[1].english)
    print(f"{mel.frames.shape[0]:3d} frames | {n_english:2d} English positions | {text.replace('~', '')[:52]}...")
