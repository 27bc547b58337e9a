"""Chat templates: the string scaffolding wrapped around conversation turns.

Rendering is a pure function of (template, conversation). Three templates
ship built in:

  plain       empty markers, answers terminated by EOS; used for the
              caption-alignment pretraining stage
  llava_v1    "USER: ... ASSISTANT: ..." with a system message
  gemma_like  start/end-of-turn delimiters, answer terminated by the
              end-of-turn marker instead of EOS
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ValidationError
from ..registry import register_component
from .conversations import Conversation, ROLE_ASSISTANT, ROLE_HUMAN

# String rendering of the EOS token in prompts (the tokenizer emits the
# EOS id directly; this literal only appears in rendered text).
EOS_TEXT = "</s>"


@dataclass(frozen=True)
class ChatTemplate:
    name: str
    system_message: str = ""
    user_prefix: str = ""
    user_suffix: str = ""
    assistant_prefix: str = ""
    assistant_suffix: str = ""
    add_bos: bool = False
    add_eos_after_assistant: bool = True

    def __post_init__(self):
        if not self.add_eos_after_assistant and not self.assistant_suffix:
            raise ValidationError(
                f"template '{self.name}': answers need a terminator; set "
                "add_eos_after_assistant or a non-empty assistant_suffix")


def render_prompt(conv: Conversation, tpl: ChatTemplate,
                  include_last_assistant: bool = True) -> str:
    """Render a conversation to a flat string.

    With include_last_assistant=False the final assistant turn keeps only
    its prefix, producing a generation prompt.
    """
    conv.validate()
    parts = [tpl.system_message]
    last = len(conv.turns) - 1
    for i, turn in enumerate(conv.turns):
        if turn.role == ROLE_HUMAN:
            parts.append(tpl.user_prefix + turn.text + tpl.user_suffix)
        else:
            if i == last and not include_last_assistant:
                parts.append(tpl.assistant_prefix)
            else:
                parts.append(tpl.assistant_prefix + turn.text + tpl.assistant_suffix)
                if tpl.add_eos_after_assistant:
                    parts.append(EOS_TEXT)
    return "".join(parts)


PLAIN = ChatTemplate(name="plain")

LLAVA_V1 = ChatTemplate(
    name="llava_v1",
    system_message=("A chat between a curious user and an artificial intelligence "
                    "assistant. "),
    user_prefix="USER: ",
    user_suffix=" ",
    assistant_prefix="ASSISTANT: ",
    add_bos=True,
)

GEMMA_LIKE = ChatTemplate(
    name="gemma_like",
    user_prefix="<start_of_turn>user\n",
    user_suffix="<end_of_turn>\n",
    assistant_prefix="<start_of_turn>model\n",
    assistant_suffix="<end_of_turn>\n",
    add_bos=True,
    add_eos_after_assistant=False,
)

BUILTIN_TEMPLATES = {t.name: t for t in (PLAIN, LLAVA_V1, GEMMA_LIKE)}

for _tpl in BUILTIN_TEMPLATES.values():
    register_component("template", _tpl.name, lambda config=None, _t=_tpl: _t)
