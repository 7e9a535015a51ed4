"""Green-list watermarking: bias generation, then detect it statistically.

Half the vocabulary (keyed per preceding token) gets a log-space boost
during sampling. Watermarked text overshoots the expected green count and
the one-proportion z-test flags it; plain text stays near z = 0. Replacing
tokens erodes the signal quickly, which is exactly the fragility that
limits watermarking in practice.
"""

import numpy as np

from essaydetect.rng import SplitMix64
from essaydetect.synth import reference_model
from essaydetect.watermark import (
    WatermarkConfig,
    detect_watermark,
    generate_watermarked,
    render_text,
    sample_stream,
)

model = reference_model()
cfg = WatermarkConfig(key=2024, gamma=0.5, delta=2.0, z_threshold=4.0)

wm = generate_watermarked(model, cfg, length=200, seed=1)
plain = sample_stream(model, length=200, seed=1)

print("watermarked sample:")
print("  " + render_text(wm)[:150] + "...")
for name, stream in (("watermarked", wm), ("plain", plain)):
    v = detect_watermark(stream, cfg)
    print(
        f"{name:12s} green {v.green_count}/{v.tokens_tested}  z = {v.z:5.2f}  "
        f"flagged = {v.flagged}"
    )

print("\ntoken-replacement fragility (mean z over 30 texts):")
vocab = model.sample_tokens
for q in (0.0, 0.25, 0.5):
    zs = []
    for i in range(30):
        stream = generate_watermarked(model, cfg, 200, seed=100 + i)
        rng = SplitMix64(200 + i)
        tokens = [
            vocab[rng.randbelow(len(vocab))] if rng.random() < q else t for t in stream.tokens
        ]
        zs.append(detect_watermark(tokens, cfg).z)
    print(f"  replace {q:4.0%} of tokens -> mean z {np.mean(zs):5.2f}")
