"""Multimodal conversations and the on-disk dataset format.

A dataset file is a JSON array of records:

    {"id": str, "image": relative path (optional),
     "conversations": [{"from": "human"|"gpt", "value": str}, ...]}

The "<image>" literal marks where image features are spliced into the
token sequence; it may appear once, and only in the first human turn.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import List, Optional

from ..errors import ValidationError
from .tokenizer import IMAGE_PLACEHOLDER

ROLE_HUMAN = "human"
ROLE_ASSISTANT = "assistant"

_FROM_TO_ROLE = {"human": ROLE_HUMAN, "gpt": ROLE_ASSISTANT}


@dataclass
class Turn:
    role: str
    text: str


@dataclass
class Conversation:
    id: str
    image_path: Optional[str] = None
    turns: List[Turn] = field(default_factory=list)

    def validate(self):
        for i, turn in enumerate(self.turns):
            expected = ROLE_HUMAN if i % 2 == 0 else ROLE_ASSISTANT
            if turn.role != expected:
                raise ValidationError(
                    f"conversation '{self.id}': turn {i} has role '{turn.role}', "
                    f"expected '{expected}' (roles must alternate starting with human)")
        placeholders = sum(t.text.count(IMAGE_PLACEHOLDER) for t in self.turns)
        if placeholders > 1:
            raise ValidationError(
                f"conversation '{self.id}': '{IMAGE_PLACEHOLDER}' appears {placeholders} times, "
                "at most one is allowed")
        if placeholders == 1:
            for i, turn in enumerate(self.turns):
                if IMAGE_PLACEHOLDER in turn.text and i != 0:
                    raise ValidationError(
                        f"conversation '{self.id}': '{IMAGE_PLACEHOLDER}' must appear in the "
                        f"first human turn, found in turn {i}")
        if (self.image_path is not None) != (placeholders == 1):
            raise ValidationError(
                f"conversation '{self.id}': image path and '{IMAGE_PLACEHOLDER}' placeholder "
                "must be present together")

    def has_assistant_turn(self) -> bool:
        return any(t.role == ROLE_ASSISTANT for t in self.turns)


def conversation_from_record(record: dict, index: int) -> Conversation:
    if not isinstance(record, dict):
        raise ValidationError(f"record {index}: expected an object, got {type(record).__name__}")
    turns = []
    for j, msg in enumerate(record.get("conversations", [])):
        src = msg.get("from")
        if src not in _FROM_TO_ROLE:
            raise ValidationError(f"record {index}: turn {j} has unknown 'from' value {src!r}")
        turns.append(Turn(_FROM_TO_ROLE[src], str(msg.get("value", ""))))
    conv = Conversation(
        id=str(record.get("id", index)),
        image_path=record.get("image"),
        turns=turns,
    )
    try:
        conv.validate()
    except ValidationError as exc:
        raise ValidationError(f"record {index}: {exc}") from None
    return conv


def load_dataset(path: str) -> List[Conversation]:
    """Parse a dataset file, preserving record order; rejects bad records."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: top level must be a JSON array")
    return [conversation_from_record(rec, i) for i, rec in enumerate(raw)]


def resolve_image_path(dataset_path: str, image_rel: str) -> str:
    """Image paths in records are relative to the dataset file's directory."""
    return os.path.join(os.path.dirname(os.path.abspath(dataset_path)), image_rel)
