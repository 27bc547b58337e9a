"""Tokenization with ground-truth label masking, and batch collation.

Each rendered segment (system message, role markers, turn texts, specials)
is tokenized independently and concatenated, so token boundaries never
straddle segments. Labels carry the token id inside assistant answer text
plus its terminator (EOS or the assistant suffix) and IGNORE_INDEX (-100)
everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError
from ..numerics.ops import IGNORE_INDEX
from .conversations import Conversation, ROLE_ASSISTANT, ROLE_HUMAN
from .templates import ChatTemplate
from .tokenizer import BOS_ID, EOS_ID, IMAGE_ID, PAD_ID, ByteTokenizer


@dataclass
class TokenizedSample:
    input_ids: np.ndarray            # int32 [T]
    labels: np.ndarray               # int32 [T], IGNORE_INDEX where unsupervised
    image_token_index: Optional[int] = None
    image: Optional[np.ndarray] = None   # preprocessed [3, S, S], filled by loaders
    conv_id: str = ""

    def __len__(self):
        return int(self.input_ids.shape[0])


def tokenize_and_label(conv: Conversation, tpl: ChatTemplate, tok: ByteTokenizer,
                       require_assistant: bool = True) -> TokenizedSample:
    """Tokenize a conversation and mask everything but the answers.

    With require_assistant=False (pretraining mode) a conversation without
    any assistant turn is allowed and yields all-ignored labels.
    """
    conv.validate()
    if require_assistant and not conv.has_assistant_turn():
        raise ValidationError(f"conversation '{conv.id}' has no assistant turn")

    ids: List[int] = []
    labels: List[int] = []

    def emit_text(text: str, supervised: bool):
        for tid in tok.encode(text):
            ids.append(tid)
            labels.append(tid if supervised and tid != IMAGE_ID else IGNORE_INDEX)

    if tpl.add_bos:
        ids.append(BOS_ID)
        labels.append(IGNORE_INDEX)
    emit_text(tpl.system_message, False)
    for turn in conv.turns:
        if turn.role == ROLE_HUMAN:
            emit_text(tpl.user_prefix, False)
            emit_text(turn.text, False)
            emit_text(tpl.user_suffix, False)
        else:
            emit_text(tpl.assistant_prefix, False)
            emit_text(turn.text, True)
            emit_text(tpl.assistant_suffix, True)
            if tpl.add_eos_after_assistant:
                ids.append(EOS_ID)
                labels.append(EOS_ID)

    arr_ids = np.asarray(ids, dtype=np.int32)
    image_positions = np.where(arr_ids == IMAGE_ID)[0]
    image_token_index = int(image_positions[0]) if image_positions.size else None
    return TokenizedSample(
        input_ids=arr_ids,
        labels=np.asarray(labels, dtype=np.int32),
        image_token_index=image_token_index,
        conv_id=conv.id,
    )


def tokenize_prompt(conv: Conversation, tpl: ChatTemplate,
                    tok: ByteTokenizer) -> Tuple[np.ndarray, Optional[int]]:
    """Token ids for a generation prompt.

    Walks the same segments as tokenize_and_label but stops after the final
    assistant prefix: a trailing assistant turn contributes its prefix only,
    and a conversation ending on a human turn gets the prefix appended.
    """
    conv.validate()
    ids: List[int] = []
    if tpl.add_bos:
        ids.append(BOS_ID)
    ids.extend(tok.encode(tpl.system_message))
    last = len(conv.turns) - 1
    for i, turn in enumerate(conv.turns):
        if turn.role == ROLE_HUMAN:
            ids.extend(tok.encode(tpl.user_prefix))
            ids.extend(tok.encode(turn.text))
            ids.extend(tok.encode(tpl.user_suffix))
            if i == last:
                ids.extend(tok.encode(tpl.assistant_prefix))
        else:
            ids.extend(tok.encode(tpl.assistant_prefix))
            if i == last:
                break
            ids.extend(tok.encode(turn.text))
            ids.extend(tok.encode(tpl.assistant_suffix))
            if tpl.add_eos_after_assistant:
                ids.append(EOS_ID)
    arr = np.asarray(ids, dtype=np.int32)
    pos = np.where(arr == IMAGE_ID)[0]
    return arr, (int(pos[0]) if pos.size else None)


@dataclass
class Batch:
    ids: np.ndarray                     # int32 [B, T]
    labels: np.ndarray                  # int32 [B, T]
    lengths: List[int]                  # kept length per row, before padding
    images: Optional[np.ndarray]        # [B, 3, S, S] when every sample has one
    image_token_indices: List[Optional[int]] = field(default_factory=list)
    truncated: int = 0

    @property
    def size(self) -> int:
        return int(self.ids.shape[0])


def _truncation_cut(ids: np.ndarray, limit: int) -> int:
    """Rightmost cut <= limit that does not split a multi-byte character."""
    cut = limit
    if cut < len(ids) and 0x80 <= int(ids[cut]) <= 0xBF:
        while cut > 0 and 0x80 <= int(ids[cut]) <= 0xBF:
            cut -= 1
        # ids[cut] now leads the split character; drop it as well.
    return cut


def collate(samples: Sequence[TokenizedSample], pad_to: int,
            pad_id: int = PAD_ID) -> Batch:
    """Right-pad samples into one batch; labels pad with IGNORE_INDEX.

    Over-long samples are truncated from the right (never splitting a
    multi-byte character, never dropping the image placeholder) and counted
    in Batch.truncated.
    """
    if not samples:
        raise ValidationError("collate needs at least one sample")
    rows_ids, rows_labels, lengths, indices = [], [], [], []
    truncated = 0
    for sm in samples:
        ids, labels = sm.input_ids, sm.labels
        if len(ids) > pad_to:
            cut = _truncation_cut(ids, pad_to)
            if sm.image_token_index is not None and sm.image_token_index >= cut:
                raise ValidationError(
                    f"sample '{sm.conv_id}': truncation to {pad_to} would drop the image "
                    "placeholder")
            ids, labels = ids[:cut], labels[:cut]
            truncated += 1
        lengths.append(len(ids))
        indices.append(sm.image_token_index)
        rows_ids.append(np.concatenate(
            [ids, np.full(pad_to - len(ids), pad_id, dtype=np.int32)]))
        rows_labels.append(np.concatenate(
            [labels, np.full(pad_to - len(labels), IGNORE_INDEX, dtype=np.int32)]))

    images = None
    if all(sm.image is not None for sm in samples):
        images = np.stack([sm.image for sm in samples])
    elif any(sm.image is not None for sm in samples):
        images = [sm.image for sm in samples]

    return Batch(
        ids=np.stack(rows_ids),
        labels=np.stack(rows_labels),
        lengths=lengths,
        images=images,
        image_token_indices=indices,
        truncated=truncated,
    )
