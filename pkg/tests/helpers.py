from fragreuse.mining import MiningConfig, Template, TemplateStore
from fragreuse.patterns import HeadPattern, LabelPattern


def template(tags, head, label, head_count=10, label_count=None, frequency=10, rank=None):
    """Hand-built template; ``tags`` and patterns given as whitespace-separated text."""
    return Template(
        tuple(tags.split()),
        HeadPattern.parse(head),
        LabelPattern.parse(label),
        head_count,
        head_count if label_count is None else label_count,
        frequency,
        rank,
    )


def store(*templates, mode="bag", **config):
    return TemplateStore(tuple(templates), MiningConfig(mode=mode, **config))
