use pressure_lab_core::expr::parse;

const TEMPLATES: [&str; 20] = [
    "A*x+B",
    "A*x^2-B",
    "-A*x^3+B*x",
    "log(abs(A*x))+B",
    "exp(-A*x)/(B+x^2)",
    "sin(A*x)*cos(B*x)",
    "(x-A)*(x+B)",
    "A/(B+abs(x))",
    "x^A-x^B",
    "-(A-x)^2",
    "A-B-x",
    "A/B/(x+3)",
    "2^A^B+x",
    "-x^A*B",
    "abs(sin(x))^A+B",
    "log(A+x^2)-log(B+x^2)",
    "(A+B)*(x-(A-B))",
    "cos(exp(x/A))-B",
    "A*-x+B*--x",
    "((x))*A+((B))",
];

const PAIRS: [(&str, &str); 10] = [
    ("1", "2"),
    ("0.5", "3"),
    ("4", "0.25"),
    ("1.5", "1.5"),
    ("2", "7"),
    ("3", "0.125"),
    ("10", "1"),
    ("0.75", "2.5"),
    ("6", "5"),
    ("1", "0.5"),
];

fn corpus() -> Vec<String> {
    TEMPLATES
        .iter()
        .flat_map(|t| PAIRS.iter().map(move |(a, b)| t.replace('A', a).replace('B', b)))
        .collect()
}

#[test]
fn two_hundred_sources_round_trip() {
    let sources = corpus();
    assert_eq!(sources.len(), 200);
    for src in &sources {
        let ast = parse(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        let printed = ast.to_string();
        let again = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(again, ast, "{src} printed as {printed}");
        // printing is a fixed point after one pass
        assert_eq!(again.to_string(), printed);
        for x in [0.3, 1.7] {
            match (ast.eval(x), again.eval(x)) {
                (Ok(a), Ok(b)) => assert!(a == b || (a.is_nan() && b.is_nan()), "{src} at {x}"),
                (Err(a), Err(b)) => assert_eq!(a, b),
                other => panic!("{src}: {other:?}"),
            }
        }
    }
}

#[test]
fn hand_evaluated_values() {
    let cases = [
        ("2*x^2-1", 0.5, -0.5),
        ("-x^2", 3.0, -9.0),
        ("(-x)^2", 3.0, 9.0),
        ("2^3^2", 0.0, 512.0),
        ("1-2-3", 0.0, -4.0),
        ("12/3/2", 0.0, 2.0),
        ("1+2*3^2", 0.0, 19.0),
        ("abs(x-5)", 2.0, 3.0),
        ("log(exp(x))", 1.25, 1.25),
    ];
    for (src, x, want) in cases {
        let got = parse(src).unwrap().eval(x).unwrap();
        assert!((got - want).abs() < 1e-12, "{src}: {got}");
    }
}
