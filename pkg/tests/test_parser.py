import pytest

from ptrmpc.bench import load_program, program_names
from ptrmpc.lang import ParseError, parse
from ptrmpc.lang import ast as A


def main_body(prog):
    return next(i for i in prog.items if isinstance(i, A.FuncDef) and i.name == "main").body.body


def test_empty_main():
    prog = parse("public int main() { }")
    assert main_body(prog) == []


def test_unbalanced_brace_reports_line():
    with pytest.raises(ParseError) as ei:
        parse("public int main() {\n  public int x;\n  if (x) {\n    x = 1;\n")
    assert ei.value.line == 3  # the unclosed brace


def test_bad_character_position():
    with pytest.raises(ParseError) as ei:
        parse("public int main() {\n  public int x = 1 @ 2;\n}")
    assert (ei.value.line, ei.value.col) == (2, 20)


@pytest.mark.parametrize("name", program_names(reference=True))
def test_reference_programs_parse(name):
    prog = parse(load_program(name, reference=True))
    assert any(isinstance(i, A.FuncDef) and i.name == "main" for i in prog.items)


@pytest.mark.parametrize("name", program_names())
def test_bench_programs_parse(name):
    parse(load_program(name))


def test_declarations_and_widths():
    prog = parse("private int<20> a, *b, c[4];\npublic int main() { return 0; }")
    ds = prog.items[0]
    assert ds.spec.qual == "private" and ds.spec.bits == 20
    assert [(d.name, d.ptr_depth, d.array_len is not None) for d in ds.decls] == \
        [("a", 0, False), ("b", 1, False), ("c", 0, True)]


def test_precedence():
    prog = parse("public int main() { public int x; x = 1 + 2 * 3 == 7 && 1; }")
    e = main_body(prog)[1].expr.value
    assert isinstance(e, A.Binary) and e.op == "&&"
    eq = e.left
    assert eq.op == "==" and eq.left.op == "+" and eq.left.right.op == "*"


def test_batch_block_and_for():
    prog = parse("public int main() { public int i; for (i = 0; i < 3; i++) [ i = i; ] }")
    loop = main_body(prog)[1]
    assert isinstance(loop, A.For) and isinstance(loop.body, A.Batch)


def test_function_pointer_declarator_and_cast():
    src = """
    private int a;
    void f(private int x) { a = x; }
    public int main() {
        void (*fp)(private int) = &f;
        private int<32> *q;
        private int<8> *r = (private int<8>*) q;
        return 0;
    }"""
    prog = parse(src)
    body = main_body(prog)
    assert body[0].decls[0].fn_params is not None
    assert isinstance(body[2].decls[0].init, A.Cast)


def test_struct_definition():
    prog = parse("struct node { private int data; struct node *next; };\npublic int main() { }")
    sd = prog.items[0]
    assert isinstance(sd, A.StructDef) and sd.name == "node" and len(sd.fields) == 2
