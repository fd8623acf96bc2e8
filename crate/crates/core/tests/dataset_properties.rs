mod common;

use mas_classify::dataset::{self, Class, Dataset, SchemaSelection};
use proptest::prelude::*;

fn table(max_n: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Class>)> {
    (2..=max_n, 1usize..5).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-1e6f64..1e6, d), n),
            prop::collection::vec(prop::bool::ANY, n),
        )
            .prop_map(|(rows, bits)| {
                let labels = bits.into_iter().map(|b| if b { Class::One } else { Class::Two }).collect();
                (rows, labels)
            })
    })
}

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("a{j}")).collect()
}

proptest! {
    #[test]
    fn export_then_ingest_is_identity((rows, labels) in table(25)) {
        let ds = common::dataset(rows.clone(), Some(labels));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        dataset::export_csv(&ds, &path).unwrap();
        let sel = SchemaSelection::new(names(rows[0].len())).with_label("label");
        let back = dataset::ingest_csv(&path, &sel).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn join_ignores_table_order((rows, labels) in table(15), rotate in 0usize..3) {
        let ds = common::dataset(rows.clone(), Some(labels));
        let d = rows[0].len();
        // one table per column, labels on the last
        let mut tables: Vec<(String, Dataset)> = (0..d)
            .map(|j| {
                let col = ds.select(&[format!("a{j}")]).unwrap();
                let col = if j + 1 == d { col } else { col.without_labels() };
                (format!("src{j}"), col)
            })
            .collect();
        let sel = SchemaSelection::new(names(d)).with_label("label");
        let first = dataset::join_sources(&tables, &sel).unwrap();
        tables.rotate_left(rotate % d);
        tables.reverse();
        let second = dataset::join_sources(&tables, &sel).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(first.n_instances(), ds.n_instances());
        let mut ids = first.instance_ids().to_vec();
        ids.sort();
        prop_assert_eq!(ids.as_slice(), first.instance_ids());
    }

    #[test]
    fn split_is_an_exact_partition(n in 4usize..60, frac in 0.1f64..0.9, seed in any::<u64>()) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels: Vec<Class> = (0..n).map(|i| if i % 2 == 0 { Class::One } else { Class::Two }).collect();
        let ds = common::dataset(rows, Some(labels));
        let Ok((train, test)) = dataset::split_train_test(&ds, frac, seed) else { return Ok(()) };
        prop_assert_eq!(train.n_instances() + test.n_instances(), n);
        prop_assert_eq!(test.n_instances(), (n as f64 * frac).round() as usize);
        let mut all: Vec<String> = train.instance_ids().iter().chain(test.instance_ids()).cloned().collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), n);
        let again = dataset::split_train_test(&ds, frac, seed).unwrap();
        prop_assert_eq!(again, (train, test));
    }

    #[test]
    fn every_ingested_dataset_validates(cells in prop::collection::vec("[0-9a-z.\\-]{0,4}", 6)) {
        let csv = format!("id,a,b\nr1,{},{}\nr2,{},{}\nr3,{},{}\n", cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]);
        if let Ok(ds) = dataset::parse_csv(&csv, "t", &SchemaSelection::new(["a", "b"])) {
            prop_assert!(ds.validate().is_ok());
            prop_assert!(ds.rows().flatten().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn four_sources_join_into_eight_columns() {
    let s = mas_classify::zones::generate_zones(12, 2, 5).unwrap();
    let tables = s.source_tables().unwrap();
    assert_eq!(tables.len(), 4);
    let joined = dataset::join_sources(&tables, &mas_classify::zones::default_selection()).unwrap();
    assert_eq!(joined.n_attributes(), 8);
    let tags: Vec<&str> = joined.attributes().iter().map(|a| a.source_table.as_str()).collect();
    assert!(tags.contains(&"social_status") && tags.contains(&"clinical"));
    let direct = s.to_dataset().unwrap();
    assert_eq!(joined.instance_ids(), direct.instance_ids());
    assert_eq!(joined.labels(), direct.labels());
    assert!(joined.rows().eq(direct.rows()));
}
