from django.test import SimpleTestCase

from amc.runner import RadioTestRunner


class RunnerTests(SimpleTestCase):
    def test_slow_tests_skipped_by_default(self):
        self.assertIn('slow', RadioTestRunner(verbosity=0).exclude_tags)

    def test_slow_tests_run_when_tagged(self):
        runner = RadioTestRunner(verbosity=0, tags=['slow'])
        self.assertNotIn('slow', runner.exclude_tags)
        self.assertIn('slow', runner.tags)
