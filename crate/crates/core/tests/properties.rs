use proptest::prelude::*;

use level_forge::caption::{
    parse_caption, phrase_space, render, shuffle_phrases, Caption, CaptionStyle, Phrase,
};
use level_forge::concepts::{detect, ConceptKind};
use level_forge::dataset::{decode_record, DatasetRecord, SceneSource};
use level_forge::diversity::edit_distance;
use level_forge::generate::generate_constructive;
use level_forge::project::{LevelProject, ProjectHeader};
use level_forge::score::c_score;
use level_forge::solve::{solve, verify_path, MoveModel};
use level_forge::tiles::{parse_level, TileGrid, TileKind, SCENE_HEIGHT, SCENE_WIDTH};

fn tile() -> impl Strategy<Value = char> {
    // sky-heavy, like real scenes
    prop_oneof![
        6 => Just('-'),
        4 => proptest::sample::select(TileKind::ALL.map(TileKind::symbol).to_vec()),
    ]
}

fn grid(height: usize, width: usize) -> impl Strategy<Value = TileGrid> {
    proptest::collection::vec(proptest::collection::vec(tile(), width), height).prop_map(|rows| {
        let rows: Vec<String> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        TileGrid::from_rows(&rows).unwrap()
    })
}

fn scene() -> impl Strategy<Value = TileGrid> {
    (SCENE_WIDTH..=24).prop_flat_map(|w| grid(SCENE_HEIGHT, w))
}

fn caption() -> impl Strategy<Value = Caption> {
    let per_concept: Vec<_> = ConceptKind::TRAINING
        .into_iter()
        .map(|c| {
            proptest::option::weighted(0.3, proptest::sample::select(phrase_space(c)))
                .prop_map(move |f| f.map(|f| Phrase::new(c, f)))
        })
        .collect();
    per_concept.prop_map(|phrases| {
        Caption::new(
            CaptionStyle::Regular,
            phrases.into_iter().flatten().collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn level_text_round_trips(g in (1usize..=20, 1usize..=40).prop_flat_map(|(h, w)| grid(h, w))) {
        let parsed = parse_level("p", &g.serialize()).unwrap().to_grid();
        prop_assert_eq!(parsed, g);
    }

    #[test]
    fn captions_of_any_scene_reparse(s in scene()) {
        let report = detect(&s).unwrap();
        for style in CaptionStyle::ALL {
            let c = render(&report, style);
            prop_assert_eq!(parse_caption(&c.text(), style).unwrap(), c);
        }
    }

    #[test]
    fn c_score_bounds_and_order(p in caption(), a in caption(), seed in any::<u64>()) {
        let b = c_score(&p, &a);
        prop_assert!((-1.0..=1.0).contains(&b.c_score));
        prop_assert_eq!(b.per_concept.len(), ConceptKind::ALL.len());
        let shuffled = c_score(&shuffle_phrases(&p, seed), &shuffle_phrases(&a, seed ^ 1));
        prop_assert_eq!(shuffled.c_score, b.c_score);
        prop_assert_eq!(c_score(&p, &p).c_score, 1.0);
    }

    #[test]
    fn edit_distance_is_a_metric(
        (a, b, c) in (SCENE_WIDTH..=20).prop_flat_map(|w| (grid(SCENE_HEIGHT, w), grid(SCENE_HEIGHT, w), grid(SCENE_HEIGHT, w)))
    ) {
        let d = |x: &TileGrid, y: &TileGrid| edit_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert!(d(&a, &b) <= a.height() * a.width());
    }

    #[test]
    fn solver_paths_verify(s in scene(), jump in 2usize..=5, gap in 2usize..=7) {
        let model = MoveModel { max_jump_height: jump, max_gap_clear: gap, can_break_blocks: false };
        let r = solve(&s, &model);
        prop_assert_eq!(r.beatable, r.path.is_some());
        if let Some(path) = &r.path {
            prop_assert!(verify_path(&s, &model, path));
        }
    }

    #[test]
    fn records_round_trip(s in scene(), window in 0usize..10_000) {
        let record = DatasetRecord::from_scene(s, SceneSource { level: "lvl".into(), window }).unwrap();
        let line = serde_json::to_string(&record).unwrap();
        prop_assert_eq!(decode_record(&line).unwrap(), record);
    }

    #[test]
    fn projects_round_trip(scenes in proptest::collection::vec(grid(SCENE_HEIGHT, SCENE_WIDTH), 0..4), revision in 0u64..100) {
        let project = LevelProject {
            header: ProjectHeader { id: "p-1".into(), name: "x".into(), created: 1, modified: 2, revision },
            scenes,
        };
        prop_assert_eq!(LevelProject::decode(&project.encode()).unwrap(), project);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_invariants(prompt in caption(), seed in any::<u64>(), width in SCENE_WIDTH..=32) {
        let out = generate_constructive(&prompt, seed, width).unwrap();
        prop_assert_eq!(out.scene.height(), SCENE_HEIGHT);
        prop_assert_eq!(out.scene.width(), width);
        let report = detect(&out.scene).unwrap();
        prop_assert_eq!(report.count(ConceptKind::BrokenPipe), 0);
        prop_assert_eq!(report.count(ConceptKind::BrokenCannon), 0);
        prop_assert_eq!(render(&report, CaptionStyle::Regular).text(), out.caption.clone());
        prop_assert_eq!(out.exact, out.breakdown.c_score >= 1.0);
        // phrase order does not matter
        let again = generate_constructive(&shuffle_phrases(&prompt, seed), seed, width).unwrap();
        prop_assert_eq!(again.scene, out.scene);
    }
}
