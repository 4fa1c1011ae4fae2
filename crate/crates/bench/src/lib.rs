//! Shared inputs for the checker benchmarks.

pub const NEGATE: &str = r#"
let negate (x :: IorB) :: {v | tag(v) = tag(x)} =
  if tag x = "Int" then 0 - x else not x
in
negate"#;

pub const MAP: &str = r#"
let rec map :: forall A, B. (A -> B) -> List[A] -> List[B] =
  fun f -> fun xs ->
    if xs = null then null
    else new List(f xs["hd"], map f xs["tl"])
in
map"#;
