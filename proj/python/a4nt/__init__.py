"""Adversarial author-attribute obfuscation."""

import json

from ._a4nt import (
    CheckpointError,
    Service as _Service,
    checkpoint_kind,
    f1_score,
    meteor_proxy,
    reserved_tokens,
    split_sentences,
    tokenize,
    write_synthetic_corpus,
    write_untrained_models,
)

__all__ = [
    "CheckpointError",
    "RequestFailed",
    "Service",
    "checkpoint_kind",
    "f1_score",
    "meteor_proxy",
    "reserved_tokens",
    "split_sentences",
    "tokenize",
    "write_synthetic_corpus",
    "write_untrained_models",
]


class RequestFailed(Exception):
    def __init__(self, status, body):
        super().__init__(body.get("error", str(status)))
        self.status = status
        self.field = body.get("field")


class Service:
    """In-process access to the classify and obfuscate handlers."""

    def __init__(self, classifier, translator, max_len=20):
        self._impl = _Service(str(classifier), str(translator), max_len)

    @property
    def task(self):
        return self._impl.task

    def request(self, method, path, body=None):
        status, text = self._impl.handle(method, path, "" if body is None else json.dumps(body))
        return status, json.loads(text)

    def _post(self, path, body):
        status, out = self.request("POST", path, body)
        if status != 200:
            raise RequestFailed(status, out)
        return out

    def classify(self, text, task=None):
        return self._post("/api/classify", {"text": text, "task": task or self.task})

    def obfuscate(self, text, target, k=1, seed=0, task=None):
        return self._post(
            "/api/obfuscate",
            {"text": text, "task": task or self.task, "target": target, "k": k, "seed": seed},
        )
