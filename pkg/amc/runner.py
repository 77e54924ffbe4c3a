from django.test.runner import DiscoverRunner

SLOW_TAG = 'slow'


class RadioTestRunner(DiscoverRunner):
    """Skips tests tagged ``slow`` (desk-scale training runs) unless tags are asked for explicitly."""

    def __init__(self, tags=None, exclude_tags=None, **kwargs):
        exclude_tags = set(exclude_tags or ())
        if not tags:
            exclude_tags.add(SLOW_TAG)
        super().__init__(tags=tags, exclude_tags=exclude_tags, **kwargs)
