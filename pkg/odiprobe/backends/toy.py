#!/usr/bin/env python3

import logging
import re

import torch
from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
from tokenizers.models import WordPiece
from transformers import BertConfig, BertForMaskedLM, PreTrainedTokenizerFast

from odiprobe.backends.hf import TransformersBackend


logger = logging.getLogger('odiprobe.backends.toy')

PAD, UNK, CLS, SEP, MASK = SPECIAL_TOKENS = ['[PAD]', '[UNK]', '[CLS]', '[SEP]', '[MASK]']
# Close to what BERT's pre-tokenizer emits: runs of word characters and
# single punctuation marks
PRETOKEN = re.compile(r'\w+|[^\w\s]')


def build_vocabulary(texts):
    words = set()
    for text in texts:
        words.update(PRETOKEN.findall(text.lower()))
    return SPECIAL_TOKENS + sorted(words.difference(SPECIAL_TOKENS))


def build_tokenizer(vocabulary, max_sequence_length):
    """ Word level WordPiece tokenizer with BERT's normalization and
    [CLS] ... [SEP] framing """
    vocab = {token: i for i, token in enumerate(vocabulary)}

    backend = Tokenizer(WordPiece(vocab, unk_token=UNK))
    backend.normalizer = normalizers.BertNormalizer(lowercase=True)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.post_processor = processors.TemplateProcessing(
        single='{} $A {}'.format(CLS, SEP),
        pair='{} $A {} $B:1 {}:1'.format(CLS, SEP, SEP),
        special_tokens=[(CLS, vocab[CLS]), (SEP, vocab[SEP])],
    )
    backend.add_special_tokens(SPECIAL_TOKENS)

    return PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token=UNK,
        pad_token=PAD,
        cls_token=CLS,
        sep_token=SEP,
        mask_token=MASK,
        model_max_length=max_sequence_length,
    )


class ToyBackend(TransformersBackend):
    """ Small randomly initialised BERT masked LM over a word level vocabulary
    built from the texts it will see. Meant for CPU runs of the whole
    training and evaluation loop """

    @classmethod
    def create(cls, backend_id, options=None, texts=None, seed=None):
        options = dict(options or {})
        if not texts:
            raise ValueError('The toy backend builds its vocabulary from texts, none were given')

        max_sequence_length = options.get('max_sequence_length', 128)
        vocabulary = build_vocabulary(texts)
        tokenizer = build_tokenizer(vocabulary, max_sequence_length)

        config = BertConfig(
            vocab_size=len(vocabulary),
            hidden_size=options.get('hidden_size', 64),
            num_hidden_layers=options.get('num_hidden_layers', 2),
            num_attention_heads=options.get('num_attention_heads', 2),
            intermediate_size=options.get('intermediate_size', 128),
            max_position_embeddings=max_sequence_length,
            pad_token_id=vocabulary.index(PAD),
        )

        if seed is not None:
            torch.manual_seed(seed)
        model = BertForMaskedLM(config)

        logger.info('Built {} with {} vocabulary entries'.format(backend_id, len(vocabulary)))
        return cls(
            backend_id,
            model,
            tokenizer,
            learning_rate=options.get('learning_rate', 1e-3),
            device=options.get('device', 'cpu'),
            max_sequence_length=max_sequence_length,
        )
