import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

FIXTURE_WORDS = (
    "the cat sat on a mat and the dog ran far away . ! ? "
    "rivers flow past green hills under a pale sky while birds sing songs "
    "children write essays about cities science and society every year"
).split()


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A randomly initialized word-level causal LM saved to disk, so the
    adapter loads it exactly like a published checkpoint (no network)."""
    vocab = {"<eos>": 0, "<unk>": 1}
    for w in FIXTURE_WORDS:
        vocab.setdefault(w, len(vocab))
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    fast = PreTrainedTokenizerFast(tokenizer_object=tok, eos_token="<eos>", unk_token="<unk>")
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=24,  # small window so chunking is easy to trigger
        n_layer=1,
        n_head=2,
        n_embd=16,
        bos_token_id=0,
        eos_token_id=0,
    )
    torch.manual_seed(1234)
    model = GPT2LMHeadModel(config)
    out = tmp_path_factory.mktemp("tiny-lm")
    fast.save_pretrained(out)
    model.save_pretrained(out)
    return str(out)
