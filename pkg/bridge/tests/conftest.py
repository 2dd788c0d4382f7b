"""Builds the tiny genuinely-trained checkpoint the bridge tests serve.

The hub is unreachable in CI, so we train a byte-level BPE tokenizer and
a 2-layer GPT-2 on a small conversational corpus and save both; loading
then goes through the exact AutoTokenizer/AutoModelForCausalLM path a hub
checkpoint would use.
"""

import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

CORPUS = [
    "hello world",
    "how are you doing today",
    "i'm going to work now",
    "do you want to go out for dinner tonight",
    "the weather is nice today",
    "what's your favorite kind of food",
    "i will see you around",
    "it was a pleasure catching up with you",
    "is it going to rain next weekend",
    "sorry but i have to go",
    "are you going to the party",
    "i lost the book",
    "be sure to watch the meteor shower tonight",
    "what do you think about the world",
    "i'd like to know how it works",
    "she never called me back",
] * 8


def train_tiny_checkpoint(out_dir: str, steps: int = 120) -> str:
    torch.manual_seed(0)
    tok = Tokenizer(models.BPE())
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=384, min_frequency=1, special_tokens=["<|endoftext|>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet())
    tok.train_from_iterator(CORPUS, trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tok, bos_token="<|endoftext|>",
        eos_token="<|endoftext|>")

    config = GPT2Config(
        vocab_size=len(tokenizer), n_positions=96, n_embd=48, n_layer=2,
        n_head=2, bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.bos_token_id)
    model = GPT2LMHeadModel(config)
    model.train()
    optim = torch.optim.AdamW(model.parameters(), lr=3e-3)
    bos = tokenizer.bos_token_id
    encoded = [
        [bos] + tokenizer.encode(s, add_special_tokens=False)
        for s in CORPUS[:len(set(CORPUS))]
    ]
    for step in range(steps):
        ids = encoded[step % len(encoded)]
        batch = torch.tensor([ids], dtype=torch.long)
        loss = model(input_ids=batch, labels=batch).loss
        optim.zero_grad()
        loss.backward()
        optim.step()
    model.eval()

    tokenizer.save_pretrained(out_dir)
    model.save_pretrained(out_dir)
    return out_dir


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny-lm")
    return train_tiny_checkpoint(str(out))
