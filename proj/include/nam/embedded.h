#pragma once

namespace nam {

/// Text of grammars/minic.ag, captured at build time.
const char* embedded_minic_grammar();

}  // namespace nam
