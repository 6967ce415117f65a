//! Recorded response bodies for the fixture in `common`.

use serde_json::{json, Value};

pub const ENTITIES: &str = concat!(
    r#"[{"id":"antonio-costa","canonical_name":"António Costa","category":"politics"},"#,
    r#"{"id":"cristiano-ronaldo","canonical_name":"Cristiano Ronaldo","category":"sports"},"#,
    r#"{"id":"sl-benfica","canonical_name":"Sport Lisboa e Benfica","category":"sports"}]"#
);

pub const BUBBLES: &str = concat!(
    r#"[{"term":"golo","frequency":4,"polarity":0,"scale":1.0},"#,
    r#"{"term":"jogo","frequency":2,"polarity":0,"scale":0.5}]"#
);

pub const TREND: &str = concat!(
    r#"[{"date":"2015-07-10","count":0},{"date":"2015-07-11","count":5},"#,
    r#"{"date":"2015-07-12","count":0}]"#
);

pub const TWEETS: &str = concat!(
    r#"[{"record_id":"a1","timestamp":"2015-07-10T09:00:00Z","#,
    r#""text":"CR7 golo, golo e vitoria!! http://t.co/abcdef123","#,
    r#""spans":[{"offset":4,"length":4,"polarity":0},{"offset":10,"length":4,"polarity":0},"#,
    r#"{"offset":17,"length":7,"polarity":1}]},"#,
    r#"{"record_id":"a2","timestamp":"2015-07-10T10:30:00Z","#,
    r#""text":"Ronaldo golo e golo no jogo, que vitoria para o jogo","#,
    r#""spans":[{"offset":8,"length":4,"polarity":0},{"offset":15,"length":4,"polarity":0},"#,
    r#"{"offset":23,"length":4,"polarity":0},{"offset":33,"length":7,"polarity":1},"#,
    r#"{"offset":48,"length":4,"polarity":0}]}]"#
);

pub const NOT_FOUND: &str = r#"{"code":"not_found","message":"unknown entity `nobody`"}"#;

pub const INVALID_RANGE: &str =
    r#"{"code":"bad_request","message":"invalid date range: 2015-07-12 is after 2015-07-10"}"#;

pub const MODEL_NOT_BUILT: &str =
    r#"{"code":"model_not_built","message":"no topic model has been built for scope `global`"}"#;

/// A single-topic model puts every token in topic 0, so its
/// distributions have a closed form: phi = (n_v + beta) / (N + V beta).
pub fn single_topic_topics() -> Value {
    let beta = 0.01;
    let counts = [("golo", 4.0), ("jogo", 2.0), ("vitoria", 2.0)];
    let n: f64 = counts.iter().map(|c| c.1).sum();
    let denom = n + counts.len() as f64 * beta;
    let terms: Vec<Value> = counts
        .iter()
        .map(|(t, c)| json!({"term": t, "weight": (c + beta) / denom}))
        .collect();
    json!([{"topic_id": 0, "topic_terms": terms, "weight": 1.0}])
}
