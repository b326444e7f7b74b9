mod props;

macro_rules! suite {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = props::$name() {
                    panic!("{e}");
                }
            }
        )*
    };
}

suite!(
    field_laws,
    inverse_and_division,
    valuation_laws,
    tree_metric_axioms,
    gauss_multiplicativity,
    tangent_multiplicities,
    preimage_degrees,
    moebius_isometry,
    barycenter_equivariance,
);
