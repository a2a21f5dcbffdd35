import pathlib
import tokenize

import pytest

import pta_unet

PACKAGE = pathlib.Path(pta_unet.__file__).parent


@pytest.mark.parametrize('path', sorted(PACKAGE.rglob('*.py')), ids=lambda p: str(p.relative_to(PACKAGE)))
def test_blocks_indent_with_tabs(path):
	with tokenize.open(path) as f:
		for token in tokenize.generate_tokens(f.readline):
			if token.type == tokenize.INDENT:
				assert set(token.string) == {'\t'}, f"{path}:{token.start[0]}"
