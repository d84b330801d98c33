//! Parser for the `name:key=value,key=value` form shared by norm and LMO specs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub(crate) struct KeyValues {
    name: String,
    pairs: BTreeMap<String, String>,
}

impl KeyValues {
    pub(crate) fn split(text: &str) -> Result<(String, KeyValues)> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (text, ""),
        };
        if name.is_empty() {
            return Err(Error::parse("empty name"));
        }
        let mut pairs = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("`{item}` is not key=value")))?;
            if pairs.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::parse(format!("duplicate key `{}`", k.trim())));
            }
        }
        let name = name.to_ascii_lowercase();
        Ok((
            name.clone(),
            KeyValues { name, pairs },
        ))
    }

    pub(crate) fn take(&mut self, key: &str) -> Option<String> {
        self.pairs.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::parse(format!("`{}` requires `{key}=`", self.name)))
    }

    pub(crate) fn usize(&mut self, key: &str) -> Result<usize> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| Error::parse(format!("`{key}={v}` is not a positive integer")))
    }

    pub(crate) fn f64(&mut self, key: &str) -> Result<f64> {
        let v = self.required(key)?;
        parse_f64(key, &v)
    }

    pub(crate) fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| parse_f64(key, &v)).transpose()
    }

    pub(crate) fn finish(self) -> Result<()> {
        match self.pairs.keys().next() {
            Some(k) => Err(Error::parse(format!("unexpected key `{k}` for `{}`", self.name))),
            None => Ok(()),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(format!("`{key}={v}` is not a finite number")))
}
