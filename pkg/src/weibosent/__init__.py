"""Sentiment analytics for Weibo post corpora.

Stages: ``ingest`` (NDJSON parsing), ``corpus`` (repost detection and
duplicate partitioning), ``prompting`` and ``inference`` (few-shot
classification through a chat-completion endpoint), ``classifier``
(resumable labeling with duplicate inheritance), then the ``evaluation``,
``entropy`` and ``timeline`` reports.
"""

from .kernels import BACKEND
from .labels import LABEL_ORDER, UNPARSED, SentimentLabel

__version__ = "0.1.0"

__all__ = ["BACKEND", "LABEL_ORDER", "UNPARSED", "SentimentLabel", "__version__"]
