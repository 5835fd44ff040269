"""Few-shot classification prompt and strict reply parsing."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .labels import UNPARSED, SentimentLabel, _Unparsed

HEADER = (
    "You are a bot designed to judge Chinese sentences as having positive, negative, or "
    "neutral sentiment. I'm going to provide posts from Chinese social media. **IMPORTANT: "
    "You must only answer with \"positive,\u201d \"negative,\u201d \"sarcastic,\" or "
    "\u201cneutral.\u201d Do not explain your response or include other text.**"
)

CRITERIA_INTRO = "Use the following criteria for your judgment:"

CRITERIA = (
    "1. If the post speaks well of a figure or event that is commonly regarded as a good "
    "figure or event, with no unnecessary exaggeration, it is 'positive' sentiment.",
    "2. If the post disparages a figure or event commonly regarded as a wrong figure or "
    "event, then it is a 'negative' sentiment.",
    "3. If the post does not use emotional language and consists of matter-of-fact "
    "reporting of factual statements, it corresponds to a 'neutral' sentiment.",
    "4. Sarcasm in the post, which appears with exaggerated emotion, pretend naivete, or "
    "other common sarcastic tone indicators, should correspond to a 'sarcastic' sentiment.",
)

REPLY_FORMAT_NOTE = (
    "IMPORTANT: Some posts may be appended with the original post that the user replied to. "
    "They use the format: [reply]//[original post]. You must predict the sentiment of the "
    "reply only, but you may use the original post as context to understand the reply."
)

EXAMPLES_INTRO = "Here are some examples:"
CLOSING = "Now we begin. Classify:"


class EmptyPost(ValueError):
    pass


@dataclass(frozen=True)
class FewShotExample:
    post_text: str
    expected: SentimentLabel

    def __post_init__(self):
        if not self.post_text.strip():
            raise ValueError("few-shot example post must be non-empty")

    def render(self) -> str:
        return f"Post: {self.post_text}\nExpected Answer: {self.expected.title}"


DEFAULT_EXAMPLES: tuple[FewShotExample, ...] = (
    FewShotExample(
        "#关注新型肺炎#【国家监委派出调查组，全面调查涉及李文亮医生有关问题】经中央批准，国家监察 委员会决定派出调查组赴湖北省武汉市，就群众反映的涉及李文亮医生的有关问题作全面调查。O国家监委派出调查组，全面调查涉及李文亮医生有关问题",
        SentimentLabel.NEUTRAL,
    ),
    FewShotExample(
        "妈妈 我已经快二十天没喝奶茶 没有大吃大喝了 求求你赶紧疫情结束 我人都快没了 我想上课我想喝奶茶我想吃烧烤",
        SentimentLabel.NEGATIVE,
    ),
    FewShotExample(
        "高中时就暗恋他已久，高三毕业那天我鼓起勇气表白，万万没想到他居然也默默喜欢着我，填志愿时 也选择了同一个城市。后来工作了异地了四年，晃眼我们走过了十年呢，19年时我们步入了婚姻礼堂。我想 这世上最幸福的事情之一 那就是两个人都互相深爱并且坚持吧~疫情过后 春暖花开，我们想去武大看樱花。",
        SentimentLabel.POSITIVE,
    ),
    FewShotExample(
        "就你们敢说实话，//@7362410961:世卫组织说目前只有瑞德西韦可能有效，中科院双黄连有效，南京 大学说金银花有效，北京大学沐舒坦有效，南开大学说姜、大枣、龙眼肉都能预防。中国人民真幸福，这么 多常见药物、食品可以抗新型冠状病毒，还慌什么呢？",
        SentimentLabel.SARCASTIC,
    ),
    FewShotExample(
        "无言//因为疫情我猛然发现不管是新闻里还是现实生活中，从大官到小官，究竟还有多少智力缺陷人 士，干出来的事每天都让老百姓瞠目结舌",
        SentimentLabel.NEGATIVE,
    ),
)


@dataclass(frozen=True)
class PromptBundle:
    system_instructions: str
    examples: tuple[FewShotExample, ...] = field(default_factory=tuple)
    query_post: str = ""

    def messages(self, single_message: bool = False) -> list[dict[str, str]]:
        """Chat messages: instructions as system, post as user (or both in one user turn)."""
        if single_message:
            return [{"role": "user", "content": f"{self.system_instructions}\n{self.query_post}"}]
        return [
            {"role": "system", "content": self.system_instructions},
            {"role": "user", "content": self.query_post},
        ]


def render_instructions(examples: Sequence[FewShotExample]) -> str:
    parts = [HEADER, CRITERIA_INTRO, *CRITERIA, REPLY_FORMAT_NOTE]
    if examples:
        parts.append(EXAMPLES_INTRO)
        parts.extend(ex.render() for ex in examples)
    parts.append(CLOSING)
    return "\n\n".join(parts)


def build_prompt(post: str, examples: Sequence[FewShotExample] = DEFAULT_EXAMPLES) -> PromptBundle:
    """Bundle the classification instructions with ``post``.

    The post goes through unmodified, so reposts keep their
    ``reply//original`` shape for the model to read.
    """
    if not post.strip():
        raise EmptyPost("post is empty after trimming")
    examples = tuple(examples)
    return PromptBundle(render_instructions(examples), examples, post)


def load_examples(path: str | Path) -> tuple[FewShotExample, ...]:
    """Read an example-set override: one ``{"post": ..., "label": ...}`` object per line."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.append(FewShotExample(row["post"], SentimentLabel(row["label"].strip().lower())))
            except (KeyError, ValueError, AttributeError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad example ({exc})") from None
    return tuple(out)


# Stripped from both ends of a reply before matching.
_DECORATION = (
    " \t\r\n\u3000"
    "\"'`\u201c\u201d\u2018\u2019\u300c\u300d\u300e\u300f\u00ab\u00bb"
    ".,!?;:\u3002\uff0c\uff01\uff1f\uff1b\uff1a\u3001"
    "*_()[]\uff08\uff09"
)


def parse_label(raw: str) -> SentimentLabel | _Unparsed:
    """Reduce a model reply to a label, or UNPARSED.

    Case, surrounding whitespace, quotes, brackets and punctuation are
    ignored; whatever remains must be exactly one label word.
    """
    word, prev = raw.lower(), None
    while word != prev:
        prev, word = word, word.strip().strip(_DECORATION)
    try:
        return SentimentLabel(word)
    except ValueError:
        return UNPARSED
