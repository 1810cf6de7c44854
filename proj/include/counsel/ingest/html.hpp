#ifndef COUNSEL_INGEST_HTML_HPP
#define COUNSEL_INGEST_HTML_HPP

// A small, strict HTML tree builder and CSS selector subset, enough to pull
// question/answer blocks out of archived forum pages. It tolerates the usual
// implied end tags (p, li, td, ...) but rejects mismatched or unclosed
// container elements, unterminated tags and unterminated comments.
//
// Selector grammar: compound selectors made of `tag`, `*`, `.class`, `#id`,
// `[attr]` and `[attr=value]`, joined by descendant (whitespace) or child
// (`>`) combinators. Comma-separated groups are matched as a union.

#include <counsel/error.hpp>
#include <counsel/unicode.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace counsel::html {

using NodeId = std::size_t;
inline constexpr NodeId no_node = static_cast<NodeId>(-1);

struct Node {
	std::string tag; // empty for text nodes
	std::map<std::string, std::string> attributes;
	std::string text;
	NodeId parent = no_node;
	std::vector<NodeId> children;

	bool is_text() const noexcept { return tag.empty(); }
};

class Document {
public:
	std::vector<Node> nodes; // nodes[0] is the synthetic root

	Node const &operator[](NodeId id) const { return nodes.at(id); }

	std::vector<std::string> classes(NodeId id) const
	{
		std::vector<std::string> out;
		auto it = nodes[id].attributes.find("class");
		if (it == nodes[id].attributes.end())
			return out;
		std::string cur;
		for (char c : it->second) {
			if (std::isspace(static_cast<unsigned char>(c))) {
				if (!cur.empty())
					out.push_back(std::move(cur)), cur.clear();
			} else {
				cur += c;
			}
		}
		if (!cur.empty())
			out.push_back(cur);
		return out;
	}
};

namespace detail {

inline std::string lower(std::string_view s)
{
	std::string out(s);
	for (auto &c : out)
		c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
	return out;
}

inline bool is_void(std::string_view tag)
{
	static std::set<std::string_view> const v{"area", "base", "br", "col", "embed", "hr", "img",
											  "input", "link", "meta", "param", "source", "track", "wbr"};
	return v.contains(tag);
}

inline bool implicitly_closed(std::string_view tag)
{
	static std::set<std::string_view> const v{"p", "li", "dt", "dd", "tr", "td", "th", "option", "optgroup",
											  "thead", "tbody", "tfoot", "colgroup", "rp", "rt",
											  "html", "head", "body"};
	return v.contains(tag);
}

inline bool is_block(std::string_view tag)
{
	static std::set<std::string_view> const v{"p", "div", "li", "tr", "br", "h1", "h2", "h3", "h4", "h5",
											  "h6", "blockquote", "section", "article", "pre", "dd", "dt"};
	return v.contains(tag);
}

inline std::string decode_entities(std::string_view s)
{
	static std::map<std::string_view, std::string_view> const named{
		{"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
	std::string out;
	out.reserve(s.size());
	for (std::size_t i = 0; i < s.size(); ++i) {
		if (s[i] != '&') {
			out += s[i];
			continue;
		}
		auto const semi = s.find(';', i);
		if (semi == std::string_view::npos || semi - i > 10) {
			out += s[i];
			continue;
		}
		auto const name = s.substr(i + 1, semi - i - 1);
		if (!name.empty() && name[0] == '#') {
			char32_t cp = 0;
			bool ok = name.size() > 1;
			bool const hex = ok && (name[1] == 'x' || name[1] == 'X');
			for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
				auto const c = static_cast<unsigned char>(name[k]);
				if (hex && std::isxdigit(c))
					cp = cp * 16 + static_cast<char32_t>(std::isdigit(c) ? c - '0' : std::tolower(c) - 'a' + 10);
				else if (!hex && std::isdigit(c))
					cp = cp * 10 + static_cast<char32_t>(c - '0');
				else
					ok = false;
				if (cp > 0x10FFFF)
					ok = false;
			}
			if (ok && (hex ? name.size() > 2 : true) && cp != 0 && (cp < 0xD800 || cp > 0xDFFF)) {
				unicode::append_utf8(out, cp);
				i = semi;
				continue;
			}
		} else if (auto it = named.find(name); it != named.end()) {
			out += it->second;
			i = semi;
			continue;
		}
		out += s[i];
	}
	return out;
}

class Parser {
public:
	explicit Parser(std::string_view src) : src_(src) {}

	Document run()
	{
		doc_.nodes.push_back(Node{"#root", {}, {}, no_node, {}});
		open_.push_back(0);
		while (pos_ < src_.size()) {
			if (src_[pos_] == '<')
				markup();
			else
				text();
		}
		for (std::size_t i = open_.size(); i-- > 1;) {
			auto const &tag = doc_.nodes[open_[i]].tag;
			if (!implicitly_closed(tag))
				fail("unclosed <" + tag + ">");
		}
		return std::move(doc_);
	}

private:
	[[noreturn]] void fail(std::string const &why) const
	{
		throw FormatError("malformed HTML: " + why + " (near byte " + std::to_string(pos_) + ")");
	}

	NodeId add(Node node)
	{
		node.parent = open_.back();
		doc_.nodes.push_back(std::move(node));
		NodeId const id = doc_.nodes.size() - 1;
		doc_.nodes[open_.back()].children.push_back(id);
		return id;
	}

	void text()
	{
		auto const next = src_.find('<', pos_);
		auto const end = next == std::string_view::npos ? src_.size() : next;
		add(Node{{}, {}, decode_entities(src_.substr(pos_, end - pos_)), no_node, {}});
		pos_ = end;
	}

	void markup()
	{
		if (src_.compare(pos_, 4, "<!--") == 0) {
			auto const end = src_.find("-->", pos_ + 4);
			if (end == std::string_view::npos)
				fail("unterminated comment");
			pos_ = end + 3;
			return;
		}
		if (src_.compare(pos_, 2, "<!") == 0 || src_.compare(pos_, 2, "<?") == 0) {
			auto const end = src_.find('>', pos_);
			if (end == std::string_view::npos)
				fail("unterminated declaration");
			pos_ = end + 1;
			return;
		}
		if (src_.compare(pos_, 2, "</") == 0) {
			auto const end = src_.find('>', pos_);
			if (end == std::string_view::npos)
				fail("unterminated end tag");
			auto const name = lower(trim_ascii(src_.substr(pos_ + 2, end - pos_ - 2)));
			pos_ = end + 1;
			close(name);
			return;
		}
		if (pos_ + 1 >= src_.size() || !std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
			// A bare '<' in text.
			add(Node{{}, {}, "<", no_node, {}});
			++pos_;
			return;
		}
		open_tag();
	}

	static std::string_view trim_ascii(std::string_view s)
	{
		while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
			s.remove_prefix(1);
		while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
			s.remove_suffix(1);
		return s;
	}

	void open_tag()
	{
		++pos_;
		auto const name_start = pos_;
		while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '-' || src_[pos_] == ':'))
			++pos_;
		Node node;
		node.tag = lower(src_.substr(name_start, pos_ - name_start));
		bool self_closing = false;
		for (;;) {
			while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
				++pos_;
			if (pos_ >= src_.size())
				fail("unterminated <" + node.tag + "> tag");
			if (src_[pos_] == '>') {
				++pos_;
				break;
			}
			if (src_[pos_] == '/') {
				++pos_;
				if (pos_ < src_.size() && src_[pos_] == '>') {
					++pos_;
					self_closing = true;
					break;
				}
				continue;
			}
			if (src_[pos_] == '<')
				fail("'<' inside <" + node.tag + "> tag");
			auto const attr_start = pos_;
			while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && src_[pos_] != '=' &&
				   src_[pos_] != '>' && src_[pos_] != '/')
				++pos_;
			auto attr = lower(src_.substr(attr_start, pos_ - attr_start));
			std::string value;
			while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
				++pos_;
			if (pos_ < src_.size() && src_[pos_] == '=') {
				++pos_;
				while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
					++pos_;
				if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
					char const quote = src_[pos_++];
					auto const close = src_.find(quote, pos_);
					if (close == std::string_view::npos)
						fail("unterminated attribute value in <" + node.tag + ">");
					value = decode_entities(src_.substr(pos_, close - pos_));
					pos_ = close + 1;
				} else {
					auto const v_start = pos_;
					while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && src_[pos_] != '>')
						++pos_;
					value = decode_entities(src_.substr(v_start, pos_ - v_start));
				}
			}
			node.attributes.emplace(std::move(attr), std::move(value));
		}

		// Starting a new p/li/option implicitly ends an open sibling of the same kind.
		if (node.tag == "p" || node.tag == "li" || node.tag == "option" || node.tag == "tr" || node.tag == "td" ||
			node.tag == "th" || node.tag == "dt" || node.tag == "dd") {
			auto const &top = doc_.nodes[open_.back()].tag;
			if (top == node.tag || ((node.tag == "td" || node.tag == "th") && (top == "td" || top == "th")) ||
				((node.tag == "dt" || node.tag == "dd") && (top == "dt" || top == "dd")))
				open_.pop_back();
		}

		auto const tag = node.tag;
		auto const id = add(std::move(node));
		if (self_closing || is_void(tag))
			return;
		if (tag == "script" || tag == "style") {
			auto const end_tag = "</" + tag;
			std::size_t end = pos_;
			for (;;) {
				end = src_.find("</", end);
				if (end == std::string_view::npos)
					fail("unterminated <" + tag + ">");
				if (lower(src_.substr(end, end_tag.size())) == end_tag)
					break;
				end += 2;
			}
			auto const gt = src_.find('>', end);
			if (gt == std::string_view::npos)
				fail("unterminated end tag");
			pos_ = gt + 1;
			return;
		}
		open_.push_back(id);
	}

	void close(std::string const &name)
	{
		if (is_void(name))
			return;
		for (std::size_t i = open_.size(); i-- > 1;) {
			if (doc_.nodes[open_[i]].tag == name) {
				for (std::size_t k = open_.size(); k-- > i + 1;)
					if (!implicitly_closed(doc_.nodes[open_[k]].tag))
						fail("</" + name + "> closes <" + doc_.nodes[open_[k]].tag + ">");
				open_.resize(i);
				return;
			}
		}
		if (name == "p" || name == "html" || name == "body" || name == "head")
			return;
		fail("stray </" + name + ">");
	}

	std::string_view src_;
	std::size_t pos_ = 0;
	Document doc_;
	std::vector<NodeId> open_;
};

} // namespace detail

inline Document parse(std::string_view source)
{
	unicode::require_valid_utf8(source);
	return detail::Parser(source).run();
}

/// Visible text of a node: whitespace runs fold to one space, block-level
/// elements and <br> start a new line, empty lines are dropped.
inline std::string text_content(Document const &doc, NodeId id)
{
	std::string raw;
	auto walk = [&](auto &&self, NodeId n) -> void {
		auto const &node = doc.nodes[n];
		if (node.is_text()) {
			raw += node.text;
			return;
		}
		bool const block = detail::is_block(node.tag);
		if (block)
			raw += '\n';
		for (auto c : node.children)
			self(self, c);
		if (block)
			raw += '\n';
	};
	walk(walk, id);

	std::string out, line;
	bool pending_space = false;
	auto end_line = [&] {
		if (!line.empty()) {
			if (!out.empty())
				out += '\n';
			out += line;
		}
		line.clear();
		pending_space = false;
	};
	for (char32_t cp : unicode::code_points(raw)) {
		if (cp == U'\n') {
			end_line();
		} else if (unicode::is_space(cp)) {
			pending_space = !line.empty();
		} else {
			if (pending_space)
				line += ' ';
			pending_space = false;
			unicode::append_utf8(line, cp);
		}
	}
	end_line();
	return out;
}

// ---------------------------------------------------------------------------
// Selectors

struct Compound {
	std::string tag; // empty or "*" matches any element
	std::string id;
	std::vector<std::string> classes;
	std::vector<std::pair<std::string, std::optional<std::string>>> attributes;
};

struct Selector {
	// steps[i] relates to steps[i-1] through combinators[i-1]: '>' child, ' ' descendant
	std::vector<Compound> steps;
	std::vector<char> combinators;
};

inline std::vector<Selector> parse_selector(std::string_view text)
{
	std::vector<Selector> groups;
	Selector current;
	Compound compound;
	bool have_compound = false;
	char pending = 0;
	auto fail = [&](std::string const &why) -> void { throw ConfigError("bad selector '" + std::string(text) + "': " + why); };
	auto flush_compound = [&] {
		if (!have_compound)
			return;
		if (!current.steps.empty())
			current.combinators.push_back(pending ? pending : ' ');
		current.steps.push_back(std::move(compound));
		compound = Compound{};
		have_compound = false;
		pending = 0;
	};
	auto ident = [&](std::size_t &i) {
		auto const start = i;
		while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '-' || text[i] == '_' ||
								   static_cast<unsigned char>(text[i]) >= 0x80))
			++i;
		if (i == start)
			fail("expected a name at offset " + std::to_string(start));
		return std::string(text.substr(start, i - start));
	};

	for (std::size_t i = 0; i < text.size();) {
		char const c = text[i];
		if (std::isspace(static_cast<unsigned char>(c))) {
			flush_compound();
			++i;
		} else if (c == '>') {
			flush_compound();
			if (current.steps.empty())
				fail("'>' without a left-hand side");
			pending = '>';
			++i;
		} else if (c == ',') {
			flush_compound();
			if (current.steps.empty() || pending)
				fail("empty selector group");
			groups.push_back(std::move(current));
			current = Selector{};
			++i;
		} else if (c == '.') {
			++i;
			compound.classes.push_back(ident(i));
			have_compound = true;
		} else if (c == '#') {
			++i;
			compound.id = ident(i);
			have_compound = true;
		} else if (c == '*') {
			compound.tag = "*";
			have_compound = true;
			++i;
		} else if (c == '[') {
			auto const close = text.find(']', i);
			if (close == std::string_view::npos)
				fail("unterminated '['");
			auto const body = text.substr(i + 1, close - i - 1);
			auto const eq = body.find('=');
			std::string name = detail::lower(eq == std::string_view::npos ? body : body.substr(0, eq));
			std::optional<std::string> value;
			if (eq != std::string_view::npos) {
				auto v = body.substr(eq + 1);
				if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
					v = v.substr(1, v.size() - 2);
				value = std::string(v);
			}
			if (name.empty())
				fail("empty attribute name");
			compound.attributes.emplace_back(std::move(name), std::move(value));
			have_compound = true;
			i = close + 1;
		} else if (std::isalpha(static_cast<unsigned char>(c))) {
			if (have_compound)
				fail("tag name must come first in a compound selector");
			compound.tag = detail::lower(ident(i));
			have_compound = true;
		} else {
			fail(std::string("unexpected character '") + c + "'");
		}
	}
	flush_compound();
	if (pending)
		fail("dangling '>'");
	if (current.steps.empty())
		fail("empty selector");
	groups.push_back(std::move(current));
	return groups;
}

namespace detail {

inline bool matches(Document const &doc, NodeId n, Compound const &c)
{
	auto const &node = doc.nodes[n];
	if (node.is_text() || n == 0)
		return false;
	if (!c.tag.empty() && c.tag != "*" && c.tag != node.tag)
		return false;
	if (!c.id.empty()) {
		auto it = node.attributes.find("id");
		if (it == node.attributes.end() || it->second != c.id)
			return false;
	}
	if (!c.classes.empty()) {
		auto const have = doc.classes(n);
		for (auto const &want : c.classes)
			if (std::find(have.begin(), have.end(), want) == have.end())
				return false;
	}
	for (auto const &[name, value] : c.attributes) {
		auto it = node.attributes.find(name);
		if (it == node.attributes.end() || (value && it->second != *value))
			return false;
	}
	return true;
}

inline bool matches_from(Document const &doc, NodeId n, Selector const &sel, std::size_t step)
{
	if (!matches(doc, n, sel.steps[step]))
		return false;
	if (step == 0)
		return true;
	char const comb = sel.combinators[step - 1];
	NodeId p = doc.nodes[n].parent;
	if (comb == '>')
		return p != no_node && matches_from(doc, p, sel, step - 1);
	for (; p != no_node; p = doc.nodes[p].parent)
		if (matches_from(doc, p, sel, step - 1))
			return true;
	return false;
}

} // namespace detail

/// Elements matching any selector group, in document order.
inline std::vector<NodeId> select(Document const &doc, std::vector<Selector> const &groups)
{
	std::vector<NodeId> out;
	for (NodeId n = 1; n < doc.nodes.size(); ++n) {
		for (auto const &g : groups) {
			if (detail::matches_from(doc, n, g, g.steps.size() - 1)) {
				out.push_back(n);
				break;
			}
		}
	}
	return out;
}

inline std::vector<NodeId> select(Document const &doc, std::string_view selector)
{
	return select(doc, parse_selector(selector));
}

} // namespace counsel::html

#endif
