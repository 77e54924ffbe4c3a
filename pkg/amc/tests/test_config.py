import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from amc.config import (
    Option, join_dash_values, load_config_file, parse_bool, positive_int, resolve_options, seed_list,
)
from amc.exceptions import InvalidArgumentError

OPTIONS = {
    'epochs': Option(positive_int, default=80),
    'out': Option(str, required=True),
    'aug': Option(str, default='none', choices=('none', 'rotation')),
    'multipath': Option(parse_bool, default=False, flag=True),
}


class ResolveOptionsTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def config_file(self, text):
        path = Path(self.tmp.name) / 'run.cfg'
        path.write_text(text, encoding='utf-8')
        return path

    def test_defaults(self):
        opts = resolve_options(OPTIONS, {'out': 'm.rmdl'})
        self.assertEqual(opts, {'epochs': 80, 'out': 'm.rmdl', 'aug': 'none', 'multipath': False})

    def test_flag_beats_file_beats_default(self):
        path = self.config_file('# desk run\nepochs=5\naug=rotation\nout=from_file.rmdl\n')
        opts = resolve_options(OPTIONS, {'epochs': '7', 'aug': None, 'out': None}, path)
        self.assertEqual(opts['epochs'], 7)
        self.assertEqual(opts['aug'], 'rotation')
        self.assertEqual(opts['out'], 'from_file.rmdl')

    def test_file_booleans(self):
        path = self.config_file('out=x\nmultipath=yes\n')
        self.assertIs(resolve_options(OPTIONS, {}, path)['multipath'], True)

    def test_environment_is_not_interpolated(self):
        path = self.config_file('out=${HOME}/model.rmdl\n')
        self.assertEqual(load_config_file(path)['out'], '${HOME}/model.rmdl')

    def test_unknown_key(self):
        with self.assertRaises(InvalidArgumentError):
            resolve_options(OPTIONS, {}, self.config_file('out=x\nlearning_rate=1\n'))

    def test_key_without_value(self):
        with self.assertRaises(InvalidArgumentError):
            load_config_file(self.config_file('out\n'))

    def test_missing_file(self):
        with self.assertRaises(InvalidArgumentError):
            load_config_file(Path(self.tmp.name) / 'absent.cfg')

    def test_missing_required(self):
        with self.assertRaises(InvalidArgumentError):
            resolve_options(OPTIONS, {'epochs': '3'})

    def test_bad_values(self):
        with self.assertRaises(InvalidArgumentError):
            resolve_options(OPTIONS, {'out': 'x', 'epochs': '0'})
        with self.assertRaises(InvalidArgumentError):
            resolve_options(OPTIONS, {'out': 'x', 'epochs': 'ten'})
        with self.assertRaises(InvalidArgumentError):
            resolve_options(OPTIONS, {'out': 'x', 'aug': 'flip'})

    def test_seed_list(self):
        self.assertEqual(seed_list('0, 1,2'), (0, 1, 2))
        with self.assertRaises(InvalidArgumentError):
            seed_list(',')


class DashValueTests(SimpleTestCase):
    def test_dash_leading_values_are_joined(self):
        self.assertEqual(join_dash_values(['--out', '-20:18:2'], OPTIONS), ['--out=-20:18:2'])
        self.assertEqual(join_dash_values(['--epochs', '-.5', '--out', 'm'], OPTIONS), ['--epochs=-.5', '--out', 'm'])

    def test_flags_and_switches_are_left_alone(self):
        args = ['--multipath', '-4', '--out', '-v', '--aug', 'none']
        self.assertEqual(join_dash_values(args, OPTIONS), args)
