#!/usr/bin/env python3

import logging
import os

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer, DataCollatorForLanguageModeling

from odiprobe.backends.base import MaskedLMBackend, MASK_MARKER, check_single_mask, plain_text, SequenceTooLong
from odiprobe import store


logger = logging.getLogger('odiprobe.backends.hf')

TRAINER_STATE = 'trainer_state.pt'
BACKEND_STATE = 'backend_state.json'

TOKENIZER_MODELS = {
    'WordPiece': 'word-piece',
    'BPE': 'byte-pair',
    'Unigram': 'sentence-piece',
}


def tokenizer_family(tokenizer):
    try:
        model_name = tokenizer.backend_tokenizer.model.__class__.__name__
    except AttributeError:
        return 'word-piece'
    return TOKENIZER_MODELS.get(model_name, 'word-piece')


class TransformersBackend(MaskedLMBackend):
    """ Any masked LM loadable through transformers' Auto classes (BERT,
    RoBERTa, DistilBERT, ALBERT or a saved checkpoint directory). Inference
    always runs in eval mode, so predictions are deterministic """

    def __init__(self, backend_id, model, tokenizer, learning_rate=5e-5, device='cpu', max_sequence_length=None):
        super().__init__(backend_id)
        if not tokenizer.is_fast:
            raise ValueError('{} needs a fast tokenizer to locate words inside sentences'.format(backend_id))

        self.device = torch.device(device)
        self.model = model.to(self.device)
        self.model.eval()
        self.tokenizer = tokenizer
        self.learning_rate = learning_rate
        self.optimizer = None
        self.tokenizer_family = tokenizer_family(tokenizer)
        self.unknown_token = tokenizer.unk_token

        limits = [getattr(model.config, 'max_position_embeddings', None), tokenizer.model_max_length, max_sequence_length]
        self._max_sequence_length = min(limit for limit in limits if limit)

        size = min(len(tokenizer), model.config.vocab_size)
        self._candidates = tuple(tokenizer.convert_ids_to_tokens(list(range(size))))

    @classmethod
    def create(cls, backend_id, options=None, texts=None, seed=None):
        options = dict(options or {})
        if seed is not None:
            torch.manual_seed(seed)

        source = options.pop('path', None) or backend_id
        logger.info('Loading {} from {}'.format(backend_id, source))
        tokenizer = AutoTokenizer.from_pretrained(source, use_fast=True)
        model = AutoModelForMaskedLM.from_pretrained(source)
        return cls(backend_id, model, tokenizer, **options)

    @property
    def candidates(self):
        return self._candidates

    @property
    def max_sequence_length(self):
        return self._max_sequence_length

    @property
    def parameter_count(self):
        return sum(p.numel() for p in self.model.parameters())

    def tokenize(self, text):
        """ Tokens without special tokens, the empty string gives [] """
        return self.tokenizer.tokenize(text)

    def word_tokens(self, words, index):
        text = ' '.join(words)
        start = sum(len(word) + 1 for word in words[:index])
        end = start + len(words[index])

        encoded = self.tokenizer(text, add_special_tokens=False, return_offsets_mapping=True)
        tokens = self.tokenizer.convert_ids_to_tokens(encoded['input_ids'])

        return [token for token, (s, e) in zip(tokens, encoded['offset_mapping']) if e > s and s < end and e > start]

    def encode_probe(self, rendered):
        check_single_mask(rendered)
        text = plain_text(rendered).replace(MASK_MARKER, self.tokenizer.mask_token)
        return self.tokenizer(text, return_tensors='pt')

    def probe_length(self, rendered):
        return int(self.encode_probe(rendered)['input_ids'].shape[1])

    @torch.no_grad()
    def predict_masked(self, rendered, probe_id=None):
        encoded = self.encode_probe(rendered)
        length = encoded['input_ids'].shape[1]
        if length > self.max_sequence_length:
            raise SequenceTooLong('Probe is {} tokens long, {} accepts at most {}'.format(length, self.backend_id, self.max_sequence_length))

        positions = (encoded['input_ids'][0] == self.tokenizer.mask_token_id).nonzero(as_tuple=True)[0]
        if len(positions) != 1:
            raise ValueError('Probe encodes to {} mask tokens under {}: {!r}'.format(len(positions), self.backend_id, rendered))

        self.model.eval()
        encoded = {key: value.to(self.device) for key, value in encoded.items()}
        logits = self.model(**encoded).logits[0, positions[0]]
        values = logits[:len(self._candidates)].double().cpu().numpy()
        return self.vector(values, probe_id)

    def ensure_optimizer(self):
        if self.optimizer is None:
            self.optimizer = torch.optim.AdamW(self.model.parameters(), lr=self.learning_rate)
        return self.optimizer

    def train_mlm_step(self, batch, masking_config=None):
        if not batch:
            raise ValueError('Cannot train on an empty batch')

        masking_config = masking_config or {}
        optimizer = self.ensure_optimizer()

        encoded = self.tokenizer(list(batch), truncation=True, max_length=self.max_sequence_length)
        collator = DataCollatorForLanguageModeling(tokenizer=self.tokenizer, mlm_probability=masking_config.get('mlm_probability', 0.15))
        inputs = collator([{'input_ids': ids} for ids in encoded['input_ids']])

        self.seen_examples += len(batch)

        if not bool((inputs['labels'] != -100).any()):
            logger.debug('No position was masked in a batch of {}, skipping the update'.format(len(batch)))
            return 0.0

        self.model.train()
        inputs = {key: value.to(self.device) for key, value in inputs.items()}
        loss = self.model(**inputs).loss
        loss.backward()
        optimizer.step()
        optimizer.zero_grad()
        self.model.eval()

        return float(loss.detach().cpu().item())

    def save_checkpoint(self, tag, root):
        path = os.path.join(root, tag)
        os.makedirs(path, exist_ok=True)

        self.model.save_pretrained(path)
        self.tokenizer.save_pretrained(path)
        torch.save({
            'optimizer': self.optimizer.state_dict() if self.optimizer is not None else None,
            'rng': torch.get_rng_state(),
            'cuda_rng': torch.cuda.get_rng_state_all() if self.device.type == 'cuda' else None,
        }, os.path.join(path, TRAINER_STATE))
        store.write_json(os.path.join(path, BACKEND_STATE), {
            'backend_id': self.backend_id,
            'seen_examples': self.seen_examples,
            'tag': tag,
        })

        logger.info('Saved checkpoint {} at {} examples'.format(path, self.seen_examples))
        return path

    def load_checkpoint(self, handle):
        state_path = os.path.join(handle, BACKEND_STATE)
        if not os.path.exists(state_path):
            raise FileNotFoundError('Checkpoint not found: {}'.format(handle))

        try:
            model = AutoModelForMaskedLM.from_pretrained(handle)
            trainer_state = torch.load(os.path.join(handle, TRAINER_STATE))
            backend_state = store.read_json(state_path, 'checkpoint')
        except (OSError, ValueError, RuntimeError) as e:
            raise ValueError('Corrupt checkpoint {}: {}'.format(handle, e))

        self.model = model.to(self.device)
        self.model.eval()
        self.optimizer = None
        if trainer_state['optimizer'] is not None:
            self.ensure_optimizer().load_state_dict(trainer_state['optimizer'])
        torch.set_rng_state(trainer_state['rng'])
        if trainer_state.get('cuda_rng') is not None and self.device.type == 'cuda':
            torch.cuda.set_rng_state_all(trainer_state['cuda_rng'])
        self.seen_examples = backend_state['seen_examples']

        logger.info('Loaded checkpoint {} at {} examples'.format(handle, self.seen_examples))
        return self
