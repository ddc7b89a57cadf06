//! Named feature columns partitioned into the four Tier-1 categories.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// The four feature categories an account row is partitioned into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    UserMeta,
    TweetText,
    TweetMeta,
    Temporal,
}

/// Column layout: user-metadata names, the tweet-embedding block width, and
/// the tweet-metadata and temporal names, in that raw column order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub user_meta_names: Vec<String>,
    pub embedding_dim: usize,
    pub tweet_meta_names: Vec<String>,
    pub temporal_names: Vec<String>,
}

impl FeatureSchema {
    pub fn new(
        user_meta_names: Vec<String>,
        embedding_dim: usize,
        tweet_meta_names: Vec<String>,
        temporal_names: Vec<String>,
    ) -> Result<Self> {
        let schema = FeatureSchema {
            user_meta_names,
            embedding_dim,
            tweet_meta_names,
            temporal_names,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.user_meta_names.is_empty()
            || self.embedding_dim == 0
            || self.tweet_meta_names.is_empty()
            || self.temporal_names.is_empty()
        {
            return Err(Error::config(
                "every feature category needs at least one column",
            ));
        }
        let mut seen = BTreeSet::new();
        for name in self.named_columns() {
            if !seen.insert(name.clone()) {
                return Err(Error::config(format!("duplicate feature name '{name}'")));
            }
        }
        Ok(())
    }

    fn named_columns(&self) -> impl Iterator<Item = &String> {
        self.user_meta_names
            .iter()
            .chain(self.tweet_meta_names.iter())
            .chain(self.temporal_names.iter())
    }

    pub fn total_width(&self) -> usize {
        self.user_meta_names.len()
            + self.embedding_dim
            + self.tweet_meta_names.len()
            + self.temporal_names.len()
    }

    /// Raw column range of a category, in schema order.
    pub fn category_range(&self, cat: Category) -> std::ops::Range<usize> {
        let f = self.user_meta_names.len();
        let e = self.embedding_dim;
        let tm = self.tweet_meta_names.len();
        let tt = self.temporal_names.len();
        match cat {
            Category::UserMeta => 0..f,
            Category::TweetText => f..f + e,
            Category::TweetMeta => f + e..f + e + tm,
            Category::Temporal => f + e + tm..f + e + tm + tt,
        }
    }

    pub fn category_width(&self, cat: Category) -> usize {
        self.category_range(cat).len()
    }

    /// Columns that receive z-score normalization: everything except the
    /// embedding block.
    pub fn normalized_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.category_range(Category::UserMeta).collect();
        cols.extend(self.category_range(Category::TweetMeta));
        cols.extend(self.category_range(Category::Temporal));
        cols
    }

    /// Raw column index of a named (non-embedding) feature.
    pub fn column_of(&self, name: &str) -> Option<usize> {
        let f = self.user_meta_names.len();
        let e = self.embedding_dim;
        let tm = self.tweet_meta_names.len();
        if let Some(i) = self.user_meta_names.iter().position(|n| n == name) {
            return Some(i);
        }
        if let Some(i) = self.tweet_meta_names.iter().position(|n| n == name) {
            return Some(f + e + i);
        }
        self.temporal_names
            .iter()
            .position(|n| n == name)
            .map(|i| f + e + tm + i)
    }

    /// Category that owns a raw column index.
    pub fn category_of(&self, col: usize) -> Category {
        for cat in [
            Category::UserMeta,
            Category::TweetText,
            Category::TweetMeta,
            Category::Temporal,
        ] {
            if self.category_range(cat).contains(&col) {
                return cat;
            }
        }
        unreachable!("column {col} outside schema width {}", self.total_width())
    }

    /// All column headers in raw order: user-meta names, `embedding_0..`,
    /// tweet-meta names, temporal names.
    pub fn column_headers(&self) -> Vec<String> {
        let mut headers = self.user_meta_names.clone();
        headers.extend((0..self.embedding_dim).map(|i| format!("embedding_{i}")));
        headers.extend(self.tweet_meta_names.iter().cloned());
        headers.extend(self.temporal_names.iter().cloned());
        headers
    }

    /// Stable FNV-1a digest over the canonical layout, used for
    /// checkpoint/normalizer compatibility checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        for name in self.named_columns() {
            eat(name.as_bytes());
            eat(&[0xFF]);
        }
        eat(&(self.user_meta_names.len() as u64).to_le_bytes());
        eat(&(self.embedding_dim as u64).to_le_bytes());
        eat(&(self.tweet_meta_names.len() as u64).to_le_bytes());
        eat(&(self.temporal_names.len() as u64).to_le_bytes());
        h
    }

    /// The default Tier-1 account schema: 33 user-metadata features, a
    /// 768-wide averaged tweet embedding, 29 tweet-metadata features, and 7
    /// temporal features.
    pub fn default_account_schema() -> Self {
        Self::with_embedding_dim(768)
    }

    /// Default schema with a custom embedding block width.
    pub fn with_embedding_dim(embedding_dim: usize) -> Self {
        FeatureSchema::new(
            USER_META.iter().map(|s| s.to_string()).collect(),
            embedding_dim,
            TWEET_META.iter().map(|s| s.to_string()).collect(),
            TEMPORAL.iter().map(|s| s.to_string()).collect(),
        )
        .expect("built-in schema is valid")
    }

    /// Synthetic schema with generated column names, for experiments at
    /// arbitrary widths.
    pub fn synthetic(
        user_meta: usize,
        embedding_dim: usize,
        tweet_meta: usize,
        temporal: usize,
    ) -> Result<Self> {
        FeatureSchema::new(
            (0..user_meta).map(|i| format!("user_meta_{i}")).collect(),
            embedding_dim,
            (0..tweet_meta).map(|i| format!("tweet_meta_{i}")).collect(),
            (0..temporal).map(|i| format!("temporal_{i}")).collect(),
        )
    }
}

const USER_META: [&str; 33] = [
    "followers_count",
    "friends_count",
    "listed_count",
    "verified",
    "user_age",
    "follower_growth_rate",
    "friends_growth_rate",
    "listed_growth_rate",
    "followers_friend_ratio",
    "name_length",
    "username_length",
    "description_length",
    "num_digits_in_name",
    "num_digits_in_username",
    "names_ratio",
    "name_freq",
    "name_entropy",
    "username_entropy",
    "description_entropy",
    "description_sentiment",
    "names_sim",
    "url_in_description",
    "bot_in_names",
    "hashtag_in_description",
    "hashtag_in_name",
    "numbers_in_description",
    "numbers_in_name",
    "numbers_in_username",
    "emojis_in_description",
    "emojis_in_name",
    "favourites_count",
    "status_count",
    "default_profile",
];

const TWEET_META: [&str; 29] = [
    "mean_no_emoticons",
    "mean_no_urls_per_tweet",
    "mean_no_media_per_tweet",
    "mean_no_words",
    "no_languages",
    "mean_no_hashtags",
    "mean_number_of_positive_emoticons_per_tweet",
    "mean_number_of_negative_emoticons_per_tweet",
    "mean_number_of_neutral_emoticons_per_tweet",
    "mean_tweet_sentiment",
    "mean_positive_valence_score_per_tweet",
    "mean_negative_valence_score_per_tweet",
    "mean_neutral_valence_score_per_tweet",
    "positive_valence_score_of_aggregated_tweets",
    "negative_valence_score_of_aggregated_tweets",
    "neutral_valence_score_of_aggregated_tweets",
    "mean_positive_and_negative_score_ratio_per_tweet",
    "mean_emoticons_entropy_per_tweet",
    "mean_emoticons_entropy_of_aggregated_tweets",
    "mean_negative_emoticons_entropy_of_aggregated_tweets",
    "mean_positive_emoticons_entropy_of_aggregated_tweets",
    "mean_neutral_emoticons_entropy_of_aggregated_tweets",
    "mean_positive_emoticons_entropy_per_tweet",
    "mean_negative_emoticons_entropy_per_tweet",
    "mean_neutral_emoticons_entropy_per_tweet",
    "mean_favourites_per_tweet",
    "mean_retweets_per_tweet",
    "no_retweet_tweets",
    "retweet_as_tweet_rate",
];

const TEMPORAL: [&str; 7] = [
    "time_between_tweets",
    "tweet_frequency",
    "min_tweets_per_hour",
    "min_tweets_per_day",
    "max_tweets_per_hour",
    "max_tweets_per_day",
    "max_occurence_of_same_gap",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_has_expected_widths() {
        let s = FeatureSchema::default_account_schema();
        assert_eq!(s.user_meta_names.len(), 33);
        assert_eq!(s.embedding_dim, 768);
        assert_eq!(s.tweet_meta_names.len(), 29);
        assert_eq!(s.temporal_names.len(), 7);
        assert_eq!(s.total_width(), 33 + 768 + 29 + 7);
    }

    #[test]
    fn category_ranges_tile_the_row() {
        let s = FeatureSchema::synthetic(3, 4, 2, 2).unwrap();
        assert_eq!(s.category_range(Category::UserMeta), 0..3);
        assert_eq!(s.category_range(Category::TweetText), 3..7);
        assert_eq!(s.category_range(Category::TweetMeta), 7..9);
        assert_eq!(s.category_range(Category::Temporal), 9..11);
        assert_eq!(s.normalized_columns(), vec![0, 1, 2, 7, 8, 9, 10]);
    }

    #[test]
    fn column_of_resolves_across_categories() {
        let s = FeatureSchema::default_account_schema();
        assert_eq!(s.column_of("followers_count"), Some(0));
        assert_eq!(s.column_of("mean_no_words"), Some(33 + 768 + 3));
        assert_eq!(s.column_of("max_tweets_per_day"), Some(33 + 768 + 29 + 5));
        assert_eq!(s.column_of("no_such_feature"), None);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = FeatureSchema::new(
            vec!["a".into(), "a".into()],
            1,
            vec!["b".into()],
            vec!["c".into()],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn fingerprint_changes_with_layout() {
        let a = FeatureSchema::synthetic(3, 4, 2, 2).unwrap();
        let b = FeatureSchema::synthetic(3, 5, 2, 2).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }
}
